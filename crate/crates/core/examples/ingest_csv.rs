//! Turning a cumulative case table into model counts: window selection,
//! carried-forward gaps, a population side table and the warnings raised
//! for inconsistent rows.

use std::collections::HashMap;

use sirs_mfm::io::raw::ingest_reader;
use sirs_mfm::io::IngestOptions;

const TABLE: &str = "\
date,state,positive,recovered,death
20200331,NY,75795,,1550
20200401,NY,83712,4000,1941
20200402,NY,92381,4500,2373
20200404,NY,113704,5200,3565
20200401,VT,321,20,16
20200402,VT,338,19,17
20200403,VT,389,25,17
20200404,VT,461,30,20
";

fn main() -> sirs_mfm::Result<()> {
    let populations = HashMap::from([("NY".to_string(), 19_453_561), ("VT".to_string(), 623_989)]);
    let options = IngestOptions {
        window: Some("2020-04-01,2020-04-04".parse()?),
        populations,
        ..Default::default()
    };
    let out = ingest_reader(TABLE.as_bytes(), &options)?;
    for region in &out.data {
        println!("{} (N = {}): Z_R {:?}, Z_I {:?}", region.region_id, region.series.n, region.series.z_r, region.series.z_i);
    }
    for w in &out.warnings {
        println!("warning: {} {} {:?}", w.region, w.date, w.kind);
    }
    Ok(())
}
