use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::userset::MAX_USERS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("user count K={0} outside 2..={max}", max = MAX_USERS)]
    Users(usize),
    #[error("file count N={files} must be at least K={users}")]
    Files { files: usize, users: usize },
    #[error("memory M={memory} outside [0, N={files}]")]
    Memory { memory: f64, files: usize },
    #[error("file size F must be at least one packet")]
    FileSize,
    #[error("erasure probability delta={0} outside [0, 1)")]
    Delta(f64),
    #[error("payload length P must be at least one byte")]
    PayloadLen,
}

/// Parameters of one cache-enabled broadcast system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// K, number of users.
    #[serde(rename = "K")]
    pub users: usize,
    /// N, number of files in the library.
    #[serde(rename = "N")]
    pub files: usize,
    /// M, per-user cache size in files.
    #[serde(rename = "M")]
    pub memory: f64,
    /// F, packets per file.
    #[serde(rename = "F")]
    pub file_packets: usize,
    pub delta: f64,
    /// P, bytes per packet.
    #[serde(rename = "P", default = "default_payload_len")]
    pub payload_len: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_payload_len() -> usize {
    16
}

impl SystemParams {
    pub fn new(users: usize, files: usize, memory: f64, file_packets: usize, delta: f64) -> Self {
        SystemParams {
            users,
            files,
            memory,
            file_packets,
            delta,
            payload_len: default_payload_len(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_payload_len(mut self, len: usize) -> Self {
        self.payload_len = len;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(2..=MAX_USERS).contains(&self.users) {
            return Err(ParamError::Users(self.users));
        }
        if self.files < self.users {
            return Err(ParamError::Files {
                files: self.files,
                users: self.users,
            });
        }
        if !(self.memory >= 0.0 && self.memory <= self.files as f64) {
            return Err(ParamError::Memory {
                memory: self.memory,
                files: self.files,
            });
        }
        if self.file_packets == 0 {
            return Err(ParamError::FileSize);
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(ParamError::Delta(self.delta));
        }
        if self.payload_len == 0 {
            return Err(ParamError::PayloadLen);
        }
        Ok(())
    }

    /// Nominal caching probability M/N.
    pub fn p(&self) -> f64 {
        self.memory / self.files as f64
    }

    /// Packets of every file stored by every user: round(MF/N).
    pub fn quota(&self) -> usize {
        let raw = (self.memory * self.file_packets as f64 / self.files as f64).round();
        (raw.max(0.0) as usize).min(self.file_packets)
    }

    /// Caching probability actually realized by the integer quota.
    pub fn effective_p(&self) -> f64 {
        self.quota() as f64 / self.file_packets as f64
    }

    /// M' = N * quota / F.
    pub fn effective_memory(&self) -> f64 {
        self.effective_p() * self.files as f64
    }
}
