//! Binary checkpoints of a state.
//!
//! Layout (little-endian): magic `IGCK`, `u32` version, `u32` header length,
//! the basis descriptor as JSON, `u64` amplitude count, then `(re, im)` pairs
//! of `f64`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::hilbert::{BasisDescriptor, State};
use crate::scalar::{c, Real};

const MAGIC: &[u8; 4] = b"IGCK";
const VERSION: u32 = 1;

pub fn write_checkpoint<T: Real>(state: &State<T>, mut w: impl Write) -> Result<()> {
    let header = serde_json::to_vec(state.basis()).map_err(|e| Error::Io(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    let amps = state.amplitudes();
    w.write_all(&(amps.len() as u64).to_le_bytes())?;
    for a in amps {
        w.write_all(&a.re.as_f64().to_le_bytes())?;
        w.write_all(&a.im.as_f64().to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_checkpoint(mut r: impl Read) -> Result<State<f64>> {
    if &read_array::<4>(&mut r)? != MAGIC {
        return Err(Error::Io("not a state checkpoint".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Io(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let hlen = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mut header = vec![0u8; hlen];
    r.read_exact(&mut header)?;
    let basis: BasisDescriptor =
        serde_json::from_slice(&header).map_err(|e| Error::Io(format!("bad header: {e}")))?;
    let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
    if count != basis.dim() {
        return Err(Error::Io(format!(
            "checkpoint holds {count} amplitudes for a basis of dimension {}",
            basis.dim()
        )));
    }
    let mut amps = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(read_array(&mut r)?);
        let im = f64::from_le_bytes(read_array(&mut r)?);
        amps.push(c(re, im));
    }
    State::new(basis, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::SpinState;

    #[test]
    fn round_trip() {
        let b = BasisDescriptor::uniform(2, 1, 3).unwrap();
        let s = State::<f64>::product(b, &[SpinState::Plus, SpinState::Down], &[1]).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&s, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.basis(), s.basis());
        assert_eq!(back.amplitudes(), s.amplitudes());
        buf[0] = b'X';
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }
}
