//! Binary state-vector dumps.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `SVEC` |
//! | 4 | format version (`u32`, currently 1) |
//! | 4 | number of sites `2N` (`u32`) |
//! | 1 | `1` if sector-restricted, else `0` |
//! | 4 | total `S^z` of the sector (`i32`, 0 when unrestricted) |
//! | 8 | amplitude count (`u64`) |
//! | 16·count | amplitudes as `(re, im)` `f64` pairs in basis order |

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use super::{EdError, EdResult};

const MAGIC: &[u8; 4] = b"SVEC";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct RawDump {
    pub num_sites: usize,
    pub sz: Option<i32>,
    pub amplitudes: Vec<C64>,
}

pub(crate) fn write_dump<W: Write>(w: &mut W, dump: &RawDump) -> EdResult<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dump.num_sites as u32).to_le_bytes())?;
    w.write_all(&[u8::from(dump.sz.is_some())])?;
    w.write_all(&dump.sz.unwrap_or(0).to_le_bytes())?;
    w.write_all(&(dump.amplitudes.len() as u64).to_le_bytes())?;
    for a in &dump.amplitudes {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> EdResult<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub(crate) fn read_dump<R: Read>(r: &mut R) -> EdResult<RawDump> {
    if &read_array::<4, _>(r)? != MAGIC {
        return Err(EdError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(r)?);
    if version != VERSION {
        return Err(EdError::Format(format!("unsupported version {version}")));
    }
    let num_sites = u32::from_le_bytes(read_array(r)?) as usize;
    let has_sector = read_array::<1, _>(r)?[0] != 0;
    let sz = i32::from_le_bytes(read_array(r)?);
    let count = u64::from_le_bytes(read_array(r)?) as usize;
    if num_sites > 24 || count > 1 << num_sites {
        return Err(EdError::Format(format!("{count} amplitudes for {num_sites} sites")));
    }
    let amplitudes = (0..count)
        .map(|_| {
            let re = f64::from_le_bytes(read_array(r)?);
            let im = f64::from_le_bytes(read_array(r)?);
            Ok(C64::new(re, im))
        })
        .collect::<EdResult<Vec<_>>>()?;
    Ok(RawDump { num_sites, sz: has_sector.then_some(sz), amplitudes })
}
