//! Binary container for network parameters.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        4 bytes   "LFA1"
//! n_sizes      u32
//! sizes        n_sizes × u32
//! activation   u8        0 tanh, 1 relu, 2 identity
//! head         u8        0 linear, 1 softmax
//! reserved     2 bytes   zero
//! n_params     u64
//! params       n_params × f64
//! ```

use std::io::{Read, Write};

use super::mlp::{Activation, Head, Mlp};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LFA1";

fn snap_err(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

fn io_err(e: std::io::Error) -> Error {
    snap_err(e.to_string())
}

pub fn write_mlp<W: Write>(w: &mut W, net: &Mlp) -> Result<()> {
    let sizes = net.layer_sizes();
    let mut buf = Vec::with_capacity(20 + 4 * sizes.len() + 8 * net.params().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for &s in sizes {
        buf.extend_from_slice(&(s as u32).to_le_bytes());
    }
    buf.push(net.activation().id());
    buf.push(net.head().id());
    buf.extend_from_slice(&[0, 0]);
    buf.extend_from_slice(&(net.params().len() as u64).to_le_bytes());
    for p in net.params() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err)
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(b)
}

pub fn read_mlp<R: Read>(r: &mut R) -> Result<Mlp> {
    let magic: [u8; 4] = read_array(r)?;
    if &magic != MAGIC {
        return Err(snap_err(format!("bad magic {magic:?}")));
    }
    let n_sizes = u32::from_le_bytes(read_array(r)?) as usize;
    if !(2..=64).contains(&n_sizes) {
        return Err(snap_err(format!("implausible layer count {n_sizes}")));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        sizes.push(u32::from_le_bytes(read_array(r)?) as usize);
    }
    let [act, head, _, _] = read_array::<4, _>(r)?;
    let activation = Activation::from_id(act).ok_or_else(|| snap_err(format!("unknown activation id {act}")))?;
    let head = Head::from_id(head).ok_or_else(|| snap_err(format!("unknown head id {head}")))?;
    let n_params = u64::from_le_bytes(read_array(r)?) as usize;
    let expected = super::mlp::param_count(&sizes);
    if n_params != expected {
        return Err(snap_err(format!("parameter count {n_params} does not match layout ({expected})")));
    }
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        params.push(f64::from_le_bytes(read_array(r)?));
    }
    Mlp::from_params(&sizes, activation, head, params)
}

/// One row per parameter: `index,layer,kind,row,col,value` where `kind` is
/// `w` or `b` and `col` is empty for biases.
pub fn write_mlp_csv<W: Write>(w: &mut W, net: &Mlp) -> Result<()> {
    let mut out = String::from("index,layer,kind,row,col,value\n");
    let mut index = 0;
    for (l, s) in net.layer_sizes().windows(2).enumerate() {
        let (fan_in, fan_out) = (s[0], s[1]);
        for row in 0..fan_out {
            for col in 0..fan_in {
                out.push_str(&format!("{index},{l},w,{row},{col},{:e}\n", net.params()[index]));
                index += 1;
            }
        }
        for row in 0..fan_out {
            out.push_str(&format!("{index},{l},b,{row},,{:e}\n", net.params()[index]));
            index += 1;
        }
    }
    w.write_all(out.as_bytes()).map_err(io_err)
}
