//! MPS checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "SLMP" | version u32 (=1)
//! geometry u8 (0 finite, 1 infinite) | num_sites u32 (0 when infinite)
//! chi_max u32 | sv_cutoff f64 | truncation_error f64 | evolved_time f64
//! tensor count u32, then per tensor: dl u32, d u32, dr u32, dl·d·dr (re, im) f64 pairs, row-major
//! lambda count u32, then per cut: len u32, len f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array3};
use num_complex::Complex64 as C64;

use super::{MpsError, MpsResult, MpsState};
use crate::model::Geometry;

const MAGIC: &[u8; 4] = b"SLMP";
const VERSION: u32 = 1;

fn put_u32<W: Write>(w: &mut W, x: usize) -> MpsResult<()> {
    let x = u32::try_from(x).map_err(|_| MpsError::Format(format!("{x} does not fit in u32")))?;
    Ok(w.write_all(&x.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, x: f64) -> MpsResult<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}

fn get<const K: usize, R: Read>(r: &mut R) -> MpsResult<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn get_u32<R: Read>(r: &mut R) -> MpsResult<usize> {
    Ok(u32::from_le_bytes(get(r)?) as usize)
}

fn get_f64<R: Read>(r: &mut R) -> MpsResult<f64> {
    Ok(f64::from_le_bytes(get(r)?))
}

impl MpsState {
    pub fn write_checkpoint<W: Write>(&self, w: &mut W) -> MpsResult<()> {
        w.write_all(MAGIC)?;
        put_u32(w, VERSION as usize)?;
        match self.geometry {
            Geometry::Finite { num_sites } => {
                w.write_all(&[0])?;
                put_u32(w, num_sites)?;
            }
            Geometry::Infinite => {
                w.write_all(&[1])?;
                put_u32(w, 0)?;
            }
        }
        put_u32(w, self.chi_max)?;
        put_f64(w, self.sv_cutoff)?;
        put_f64(w, self.truncation_error)?;
        put_f64(w, self.evolved_time)?;
        put_u32(w, self.tensors.len())?;
        for t in &self.tensors {
            let (a, b, c) = t.dim();
            put_u32(w, a)?;
            put_u32(w, b)?;
            put_u32(w, c)?;
            for x in t.iter() {
                put_f64(w, x.re)?;
                put_f64(w, x.im)?;
            }
        }
        put_u32(w, self.lambdas.len())?;
        for l in &self.lambdas {
            put_u32(w, l.len())?;
            for &x in l.iter() {
                put_f64(w, x)?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(r: &mut R) -> MpsResult<Self> {
        if &get::<4, _>(r)? != MAGIC {
            return Err(MpsError::Format("bad magic".into()));
        }
        let version = get_u32(r)?;
        if version != VERSION as usize {
            return Err(MpsError::Format(format!("unsupported version {version}")));
        }
        let infinite = get::<1, _>(r)?[0] == 1;
        let num_sites = get_u32(r)?;
        let geometry = if infinite { Geometry::Infinite } else { Geometry::Finite { num_sites } };
        let chi_max = get_u32(r)?;
        let sv_cutoff = get_f64(r)?;
        let truncation_error = get_f64(r)?;
        let evolved_time = get_f64(r)?;
        let expected = if infinite { 2 } else { num_sites };
        let count = get_u32(r)?;
        if count != expected {
            return Err(MpsError::Format(format!("{count} tensors, expected {expected}")));
        }
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let (a, b, c) = (get_u32(r)?, get_u32(r)?, get_u32(r)?);
            if b != 2 || a == 0 || c == 0 || a * c > 1 << 26 {
                return Err(MpsError::Format(format!("tensor shape ({a}, {b}, {c})")));
            }
            let data = (0..a * b * c)
                .map(|_| Ok(C64::new(get_f64(r)?, get_f64(r)?)))
                .collect::<MpsResult<Vec<_>>>()?;
            tensors.push(Array3::from_shape_vec((a, b, c), data).expect("length checked"));
        }
        let cuts = get_u32(r)?;
        let expected_cuts = if infinite { 2 } else { num_sites + 1 };
        if cuts != expected_cuts {
            return Err(MpsError::Format(format!("{cuts} Schmidt spectra, expected {expected_cuts}")));
        }
        let mut lambdas = Vec::with_capacity(cuts);
        for _ in 0..cuts {
            let len = get_u32(r)?;
            if len == 0 || len > 1 << 16 {
                return Err(MpsError::Format(format!("spectrum of length {len}")));
            }
            lambdas.push(Array1::from((0..len).map(|_| get_f64(r)).collect::<MpsResult<Vec<_>>>()?));
        }
        let state = Self { geometry, tensors, lambdas, chi_max, sv_cutoff, truncation_error, evolved_time };
        state.check_shapes()?;
        Ok(state)
    }

    fn check_shapes(&self) -> MpsResult<()> {
        let n = self.tensors.len();
        for k in 0..n {
            let (dl, _, dr) = self.tensors[k].dim();
            let left = self.lambdas[self.wrap_cut(k)].len();
            let right = self.lambdas[self.wrap_cut(k + 1)].len();
            if dl != left || dr != right {
                return Err(MpsError::Format(format!("tensor {k} does not match its Schmidt spectra")));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> MpsResult<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_checkpoint(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> MpsResult<Self> {
        Self::read_checkpoint(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_schedule, InitialStateSpec, LatticeSpec, ProtocolSpec};
    use crate::mps::{mps_from_product, TebdOptions};

    #[test]
    fn checkpoint_round_trip() {
        for lattice in [LatticeSpec::finite(6).unwrap(), LatticeSpec::infinite()] {
            let mut m = mps_from_product(&InitialStateSpec::TripletProduct, &lattice, 16).unwrap();
            let sched = build_schedule(&ProtocolSpec::homogeneous(1.0, 1.0).unwrap()).unwrap();
            m.evolve(&sched, 0.0, 1.0, &TebdOptions { chi_max: 16, ..Default::default() }).unwrap();
            let mut buf = Vec::new();
            m.write_checkpoint(&mut buf).unwrap();
            let back = MpsState::read_checkpoint(&mut buf.as_slice()).unwrap();
            assert_eq!(back, m);
            buf[4] = 9;
            assert!(MpsState::read_checkpoint(&mut buf.as_slice()).is_err());
        }
    }
}
