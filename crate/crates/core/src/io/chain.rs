//! Chain storage: JSON Lines, a header line followed by one draw per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{ChainMeta, ChainOutput, Draw};

pub const CHAIN_FORMAT: &str = "sirs-mfm-chain";
pub const CHAIN_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    draws: usize,
    meta: ChainMeta,
}

pub fn write_chain_to<W: Write>(out: W, chain: &ChainOutput) -> Result<()> {
    let mut out = BufWriter::new(out);
    let header = Header {
        format: CHAIN_FORMAT.into(),
        version: CHAIN_VERSION,
        draws: chain.draws.len(),
        meta: chain.meta.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for draw in &chain.draws {
        serde_json::to_writer(&mut out, draw)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_chain(path: &Path, chain: &ChainOutput) -> Result<()> {
    write_chain_to(File::create(path)?, chain)
}

pub fn read_chain_from<R: std::io::Read>(input: R) -> Result<ChainOutput> {
    let mut lines = BufReader::new(input).lines();
    let first = lines.next().ok_or_else(|| Error::Data("empty chain file".into()))??;
    let header: Header = serde_json::from_str(&first)?;
    if header.format != CHAIN_FORMAT {
        return Err(Error::Data(format!("not a chain file (format `{}`)", header.format)));
    }
    if header.version != CHAIN_VERSION {
        return Err(Error::Data(format!("unsupported chain version {}", header.version)));
    }
    let mut draws = Vec::with_capacity(header.draws);
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let draw: Draw = serde_json::from_str(&line).map_err(|e| Error::Data(format!("draw {}: {e}", k + 1)))?;
        if draw.beta.values.len() != header.meta.region_ids.len() {
            return Err(Error::Data(format!("draw {}: wrong number of regions", k + 1)));
        }
        draws.push(draw);
    }
    if draws.len() != header.draws {
        return Err(Error::Data(format!("expected {} draws, found {}", header.draws, draws.len())));
    }
    Ok(ChainOutput { meta: header.meta, draws })
}

pub fn read_chain(path: &Path) -> Result<ChainOutput> {
    read_chain_from(File::open(path)?)
}
