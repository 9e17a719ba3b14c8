//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!   magic            8 bytes  "FACERXCK"
//!   version          u32
//!   architecture     u16 length + utf-8 tag
//!   input size s     u32
//!   herb count n     u32
//!   tensor count     u32
//!   per tensor:      u16 name length + utf-8 name,
//!                    u32 rank, u32 x rank extents,
//!                    f32 x product(extents) values
//!   optimizer flag   u8 (0 = absent, 1 = present)
//!   if present:      f32 lr, f32 decay, f32 momentum, u64 step count,
//!                    then one raw f32 buffer per tensor above (velocities,
//!                    same shapes, no names)
//!
//! Reload reproduces bit-identical parameters; any structural surprise
//! (magic, version, name, shape) fails before a model is produced.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::optim::{SgdConfig, SgdState};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::{Architecture, Model};

const MAGIC: &[u8; 8] = b"FACERXCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(
    model: &Model<f32>,
    optimizer: Option<&SgdState>,
    path: &Path,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    write_str(&mut w, model.architecture().as_str())?;
    w.write_all(&(model.input_size() as u32).to_le_bytes())?;
    w.write_all(&(model.herb_count() as u32).to_le_bytes())?;

    let names = model.param_names();
    let params = model.params();
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in names.iter().zip(&params) {
        write_str(&mut w, name)?;
        w.write_all(&(tensor.rank() as u32).to_le_bytes())?;
        for &d in tensor.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }

    match optimizer {
        None => w.write_all(&[0u8])?,
        Some(state) => {
            if state.velocities.len() != params.len() {
                return Err(Error::Checkpoint(format!(
                    "optimizer tracks {} tensors but the model has {}",
                    state.velocities.len(),
                    params.len()
                )));
            }
            w.write_all(&[1u8])?;
            w.write_all(&state.config.learning_rate.to_le_bytes())?;
            w.write_all(&state.config.decay.to_le_bytes())?;
            w.write_all(&state.config.momentum.to_le_bytes())?;
            w.write_all(&state.step_count.to_le_bytes())?;
            for v in &state.velocities {
                for &x in v.data() {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Model<f32>, Option<SgdState>)> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {:?}; not a checkpoint file",
            &magic
        )));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let arch = Architecture::parse(&read_str(&mut r)?)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let s = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;

    // Rebuild the skeleton, then overwrite every parameter by name.
    let mut model = Model::<f32>::build(arch, n, s, &mut Rng::new(0))
        .map_err(|e| Error::Checkpoint(format!("cannot rebuild model: {e}")))?;
    let expected_names = model.param_names();
    let count = read_u32(&mut r)? as usize;
    if count != expected_names.len() {
        return Err(Error::Checkpoint(format!(
            "{count} tensors in file, model has {}",
            expected_names.len()
        )));
    }

    let mut loaded: Vec<Tensor<f32>> = Vec::with_capacity(count);
    for expected_name in &expected_names {
        let name = read_str(&mut r)?;
        if &name != expected_name {
            return Err(Error::Checkpoint(format!(
                "tensor {name:?} out of order, expected {expected_name:?}"
            )));
        }
        let rank = read_u32(&mut r)? as usize;
        if rank == 0 || rank > 8 {
            return Err(Error::Checkpoint(format!("tensor {name:?} has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r)? as usize);
        }
        let len: usize = shape.iter().product();
        let data = read_f32_vec(&mut r, len)?;
        loaded.push(
            Tensor::from_vec(&shape, data)
                .map_err(|e| Error::Checkpoint(format!("tensor {name:?}: {e}")))?,
        );
    }
    {
        let mut slots = model.params_mut();
        for ((slot, tensor), name) in slots.iter_mut().zip(loaded).zip(&expected_names) {
            if slot.shape() != tensor.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name:?} has shape {:?}, model expects {:?}",
                    tensor.shape(),
                    slot.shape()
                )));
            }
            **slot = tensor;
        }
    }

    let mut flag = [0u8; 1];
    read_exact(&mut r, &mut flag)?;
    let optimizer = match flag[0] {
        0 => None,
        1 => {
            let learning_rate = read_f32(&mut r)?;
            let decay = read_f32(&mut r)?;
            let momentum = read_f32(&mut r)?;
            let mut buf = [0u8; 8];
            read_exact(&mut r, &mut buf)?;
            let step_count = u64::from_le_bytes(buf);
            let mut velocities = Vec::with_capacity(count);
            for p in model.params() {
                let data = read_f32_vec(&mut r, p.len())?;
                velocities.push(Tensor::from_vec(p.shape(), data).map_err(|e| {
                    Error::Checkpoint(format!("velocity buffer: {e}"))
                })?);
            }
            Some(SgdState {
                config: SgdConfig { learning_rate, decay, momentum },
                velocities,
                step_count,
            })
        }
        other => {
            return Err(Error::Checkpoint(format!("invalid optimizer flag {other}")));
        }
    };

    Ok((model, optimizer))
}

fn write_str(w: &mut impl Write, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    w.write_all(&(bytes.len() as u16).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Checkpoint("file truncated".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f32(r: &mut impl Read) -> Result<f32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(f32::from_le_bytes(buf))
}

fn read_f32_vec(r: &mut impl Read, len: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; len * 4];
    read_exact(r, &mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let mut len_buf = [0u8; 2];
    read_exact(r, &mut len_buf)?;
    let len = u16::from_le_bytes(len_buf) as usize;
    let mut bytes = vec![0u8; len];
    read_exact(r, &mut bytes)?;
    String::from_utf8(bytes).map_err(|_| Error::Checkpoint("non-utf8 string field".into()))
}
