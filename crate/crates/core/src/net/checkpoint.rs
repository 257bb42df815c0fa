//! Versioned binary checkpoint container.
//!
//! Layout (little-endian): magic `AZCK`, format version, game id,
//! architecture (input size, width, action count), seed lineage (run seed
//! and optimization step), then the raw f32 parameter tensor. Round-trips
//! are bitwise exact.

use super::{Architecture, Network};
use crate::games::GameId;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"AZCK";
const VERSION: u32 = 1;

/// A network plus its provenance.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub game: GameId,
    pub net: Network<f32>,
    pub seed: u64,
    pub step: u64,
}

pub fn save_checkpoint(path: impl AsRef<Path>, ck: &Checkpoint) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let game_tag: u8 = match ck.game {
        GameId::ConnectFour => 0,
        GameId::Pentago => 1,
    };
    w.write_all(&[game_tag])?;
    w.write_all(&(ck.net.arch.input_size as u32).to_le_bytes())?;
    w.write_all(&(ck.net.arch.width as u32).to_le_bytes())?;
    w.write_all(&(ck.net.arch.action_count as u32).to_le_bytes())?;
    w.write_all(&ck.seed.to_le_bytes())?;
    w.write_all(&ck.step.to_le_bytes())?;
    w.write_all(&(ck.net.params.len() as u64).to_le_bytes())?;
    for p in &ck.net.params {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> io::Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path.as_ref())?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad_data("not a checkpoint file (bad magic)"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(bad_data(format!("unsupported checkpoint version {version}")));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let game = match tag[0] {
        0 => GameId::ConnectFour,
        1 => GameId::Pentago,
        t => return Err(bad_data(format!("unknown game tag {t}"))),
    };
    let input_size = read_u32(&mut r)? as usize;
    let width = read_u32(&mut r)? as usize;
    let action_count = read_u32(&mut r)? as usize;
    let seed = read_u64(&mut r)?;
    let step = read_u64(&mut r)?;
    let len = read_u64(&mut r)? as usize;
    let arch = Architecture {
        input_size,
        width,
        action_count,
    };
    if len != arch.param_count() as usize {
        return Err(bad_data(format!(
            "parameter count {len} does not match architecture ({})",
            arch.param_count()
        )));
    }
    let mut params = vec![0.0f32; len];
    let mut buf = [0u8; 4];
    for p in params.iter_mut() {
        r.read_exact(&mut buf)?;
        *p = f32::from_le_bytes(buf);
    }
    Ok(Checkpoint {
        game,
        net: Network { arch, params },
        seed,
        step,
    })
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn bad_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}
