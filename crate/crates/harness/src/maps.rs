use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sbs_core::envgen::{generate_fbf, FbfParams, DEFAULT_HURST};
use sbs_core::{GridMap, GridSpec};

use crate::error::{io_err, HarnessError, Result};
use crate::seeds::map_seed;

/// Where the truth maps of a plan come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    Generate {
        count: usize,
        rows: usize,
        cols: usize,
        #[serde(default = "default_hurst")]
        hurst: f64,
        seed: u64,
    },
    Files(Vec<PathBuf>),
}

fn default_hurst() -> f64 {
    DEFAULT_HURST
}

impl MapSource {
    pub fn generated(count: usize, size: usize, seed: u64) -> Self {
        Self::Generate {
            count,
            rows: size,
            cols: size,
            hurst: DEFAULT_HURST,
            seed,
        }
    }

    /// Every `.json` file in `dir`, sorted by name.
    pub fn dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(HarnessError::Plan(format!("no map files in {}", dir.display())));
        }
        Ok(Self::Files(files))
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Generate { count, .. } => *count,
            Self::Files(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn load(&self) -> Result<Vec<GridMap<f64>>> {
        match self {
            Self::Generate {
                count,
                rows,
                cols,
                hurst,
                seed,
            } => {
                let spec = GridSpec::new(*rows, *cols, 1.0)?;
                (0..*count)
                    .map(|i| {
                        let p = FbfParams::new(spec, map_seed(*seed, i)).with_hurst(*hurst);
                        Ok(generate_fbf(&p)?)
                    })
                    .collect()
            }
            Self::Files(files) => files.iter().map(read_map).collect(),
        }
    }
}

pub fn read_map(path: impl AsRef<Path>) -> Result<GridMap<f64>> {
    read_json(path)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text).map_err(io_err(path))
}

/// Writes `map_0000.json`, `map_0001.json`, ... into `dir`.
pub fn write_maps(dir: impl AsRef<Path>, maps: &[GridMap<f64>]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    maps.iter()
        .enumerate()
        .map(|(i, m)| {
            let p = dir.join(format!("map_{i:04}.json"));
            write_json(&p, m)?;
            Ok(p)
        })
        .collect()
}
