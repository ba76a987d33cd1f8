//! Actor-only policy snapshots.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! magic     4 bytes  "LFP1"
//! count     u32
//! entries   count × { id u64, role u8 (0 manager, 1 employee), network container }
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::env::{AgentId, Role};
use crate::error::{Error, Result};
use crate::nn::snapshot::{read_mlp, write_mlp};
use crate::nn::Mlp;

pub const POLICY_MAGIC: &[u8; 4] = b"LFP1";

/// Actors of every agent at one point in training.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicySnapshot {
    pub entries: Vec<(AgentId, Role, Mlp)>,
}

impl PolicySnapshot {
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let io = |e: std::io::Error| Error::Snapshot(e.to_string());
        w.write_all(POLICY_MAGIC).map_err(io)?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes()).map_err(io)?;
        for (id, role, net) in &self.entries {
            w.write_all(&id.to_le_bytes()).map_err(io)?;
            w.write_all(&[u8::from(*role == Role::Employee)]).map_err(io)?;
            write_mlp(w, net)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Snapshot(e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != POLICY_MAGIC {
            return Err(Error::Snapshot(format!("bad policy magic {magic:?}")));
        }
        let mut count = [0u8; 4];
        r.read_exact(&mut count).map_err(io)?;
        let count = u32::from_le_bytes(count) as usize;
        let mut entries = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let mut id = [0u8; 8];
            r.read_exact(&mut id).map_err(io)?;
            let mut role = [0u8; 1];
            r.read_exact(&mut role).map_err(io)?;
            let role = match role[0] {
                0 => Role::Manager,
                1 => Role::Employee,
                b => return Err(Error::Snapshot(format!("unknown role byte {b}"))),
            };
            entries.push((u64::from_le_bytes(id), role, read_mlp(r)?));
        }
        Ok(Self { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::read(&mut bytes.as_slice())
    }

    /// Actor for agent `id`; agents without an entry use the first actor of
    /// the same role.
    pub fn actor_for(&self, id: AgentId, role: Role) -> Option<&Mlp> {
        self.entries
            .iter()
            .find(|(i, r, _)| *i == id && *r == role)
            .or_else(|| self.entries.iter().find(|(_, r, _)| *r == role))
            .map(|(_, _, net)| net)
    }

    /// Combined fingerprint of every actor.
    pub fn fingerprint(&self) -> u64 {
        self.entries.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, (id, _, net)| {
            (h ^ net.fingerprint() ^ id.rotate_left(17)).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}
