//! Trajectory dumps for offline rendering.
//!
//! Two formats:
//!
//! * CSV: header `t,node,state`, one row per non-resting node per frame,
//!   `state` is 1 (excited) or 2 (refractory).
//! * Binary frames: magic `FTRJ`, format version `u32` (= 1), node count
//!   `u32`, frame count `u32`, then per frame a `u64` time stamp followed by
//!   one state byte per node (0 resting, 1 excited, 2 refractory). All
//!   integers little-endian.

use std::io::{Read, Write};

use crate::automaton::{AutomatonState, CellState};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FTRJ";
pub const VERSION: u32 = 1;

/// Writes compact CSV rows for one frame.
pub fn write_csv_frame<W: Write>(out: &mut W, state: &AutomatonState) -> std::io::Result<()> {
    for (p, &s) in state.states.iter().enumerate() {
        if s != CellState::Resting {
            writeln!(out, "{},{},{}", state.time, p, s.code())?;
        }
    }
    Ok(())
}

pub fn write_csv_header<W: Write>(out: &mut W) -> std::io::Result<()> {
    writeln!(out, "t,node,state")
}

/// Writes a complete binary frame sequence.
pub fn write_frames<W: Write>(mut out: W, frames: &[AutomatonState]) -> Result<()> {
    let n = frames.first().map_or(0, AutomatonState::len);
    if frames.iter().any(|f| f.len() != n) {
        return Err(Error::Contract("frames differ in node count".into()));
    }
    let io = |e| Error::io("<trajectory>", e);
    out.write_all(MAGIC).map_err(io)?;
    for v in [VERSION, n as u32, frames.len() as u32] {
        out.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    let mut buf = Vec::with_capacity(n);
    for f in frames {
        out.write_all(&f.time.to_le_bytes()).map_err(io)?;
        buf.clear();
        buf.extend(f.states.iter().map(|s| s.code()));
        out.write_all(&buf).map_err(io)?;
    }
    Ok(())
}

/// Reads a binary frame sequence written by [`write_frames`].
pub fn read_frames<R: Read>(mut input: R) -> Result<Vec<AutomatonState>> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<trajectory>", e))?;
    let bad = |m: &str| Error::Parse {
        line: 0,
        message: format!("trajectory: {m}"),
    };
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("missing FTRJ header"));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    if word(4) != VERSION {
        return Err(bad("unsupported version"));
    }
    let (n, count) = (word(8) as usize, word(12) as usize);
    let frame_len = 8 + n;
    if bytes.len() != 16 + count * frame_len {
        return Err(bad("truncated frame data"));
    }
    let mut frames = Vec::with_capacity(count);
    for k in 0..count {
        let base = 16 + k * frame_len;
        let time = u64::from_le_bytes(bytes[base..base + 8].try_into().unwrap());
        let states = bytes[base + 8..base + frame_len]
            .iter()
            .map(|&c| CellState::from_code(c).ok_or_else(|| bad("invalid state byte")))
            .collect::<Result<Vec<_>>>()?;
        frames.push(AutomatonState { states, time });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_skips_resting() {
        let s = AutomatonState {
            states: vec![CellState::Resting, CellState::Excited, CellState::Refractory],
            time: 4,
        };
        let mut out = Vec::new();
        write_csv_header(&mut out).unwrap();
        write_csv_frame(&mut out, &s).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,node,state\n4,1,1\n4,2,2\n");
    }

    #[test]
    fn binary_frames_roundtrip() {
        let frames = vec![
            AutomatonState {
                states: vec![CellState::Excited, CellState::Resting],
                time: 0,
            },
            AutomatonState {
                states: vec![CellState::Refractory, CellState::Excited],
                time: 1,
            },
        ];
        let mut buf = Vec::new();
        write_frames(&mut buf, &frames).unwrap();
        assert_eq!(buf.len(), 16 + 2 * (8 + 2));
        assert_eq!(read_frames(&buf[..]).unwrap(), frames);
        assert!(read_frames(&buf[..buf.len() - 1]).is_err());
    }
}
