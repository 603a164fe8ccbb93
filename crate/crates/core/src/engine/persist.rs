use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{LevelResult, TrapResult};
use crate::atom::StateSpec;
use crate::fields::GridAxes;
use crate::surfaces::Surface;
use crate::{Error, Result};

pub const RESULT_FORMAT_VERSION: u32 = 1;

const PARAMS_FILE: &str = "params.json";
const MASK_FILE: &str = "mask.bin";
const DISTANCE_FILE: &str = "distance.bin";

#[derive(Serialize, Deserialize)]
struct Params {
    format_version: u32,
    hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
    axes: GridAxes,
    levels: Vec<StateSpec>,
    member_powers: Vec<f64>,
    mass_kg: f64,
    surfaces: Vec<Surface>,
    has_eigenvectors: bool,
}

fn potential_file(level: usize) -> String {
    format!("potential_{level}.bin")
}

fn eigenvector_file(level: usize) -> String {
    format!("eigenvectors_{level}.bin")
}

pub(crate) fn f64_bytes(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(f64::to_le_bytes).collect()
}

pub(crate) fn bytes_f64(bytes: &[u8], expected: usize, what: &str) -> Result<Vec<f64>> {
    if bytes.len() != expected * 8 {
        return Err(Error::ShapeMismatch(format!(
            "{what}: expected {expected} values ({} bytes), found {} bytes",
            expected * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

impl TrapResult {
    /// Writes the result into `dir`: `params.json`, one `potential_<k>.bin`
    /// per level (sheet-major little-endian f64, J), `mask.bin` (one byte per
    /// point), `distance.bin` and optionally `eigenvectors_<k>.bin`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let has_eigenvectors = self.levels.iter().all(|l| l.eigenvectors.is_some());
        for (k, level) in self.levels.iter().enumerate() {
            write(
                &dir.join(potential_file(k)),
                &f64_bytes(level.sheets.iter().flatten().copied()),
            )?;
            if let (true, Some(v)) = (has_eigenvectors, &level.eigenvectors) {
                write(
                    &dir.join(eigenvector_file(k)),
                    &f64_bytes(v.iter().flat_map(|c| [c.re, c.im])),
                )?;
            }
        }
        let mask: Vec<u8> = self.mask.iter().map(|&m| m as u8).collect();
        write(&dir.join(MASK_FILE), &mask)?;
        write(&dir.join(DISTANCE_FILE), &f64_bytes(self.surface_distance.iter().copied()))?;
        let params = Params {
            format_version: RESULT_FORMAT_VERSION,
            hash: self.hash.clone(),
            config: self.config.clone(),
            axes: self.axes.clone(),
            levels: self.levels.iter().map(|l| l.state).collect(),
            member_powers: self.member_powers.clone(),
            mass_kg: self.mass,
            surfaces: self.surfaces.clone(),
            has_eigenvectors,
        };
        // written last so that a complete params.json marks a complete result
        write(&dir.join(PARAMS_FILE), serde_json::to_string_pretty(&params)?.as_bytes())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<TrapResult> {
        let dir = dir.as_ref();
        let params: Params = serde_json::from_slice(&read(&dir.join(PARAMS_FILE))?)?;
        if params.format_version != RESULT_FORMAT_VERSION {
            return Err(Error::FieldMap(format!(
                "unsupported result format version {}",
                params.format_version
            )));
        }
        params.axes.validate()?;
        let n = params.axes.len();
        let mut levels = Vec::with_capacity(params.levels.len());
        for (k, state) in params.levels.iter().enumerate() {
            let dim = state.f.multiplicity();
            let flat = bytes_f64(&read(&dir.join(potential_file(k)))?, n * dim, &potential_file(k))?;
            let sheets = flat.chunks_exact(n).map(<[f64]>::to_vec).collect();
            let eigenvectors = if params.has_eigenvectors {
                let raw = bytes_f64(
                    &read(&dir.join(eigenvector_file(k)))?,
                    2 * n * dim * dim,
                    &eigenvector_file(k),
                )?;
                Some(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
            } else {
                None
            };
            levels.push(LevelResult {
                state: *state,
                sheets,
                eigenvectors,
            });
        }
        let mask_bytes = read(&dir.join(MASK_FILE))?;
        if mask_bytes.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} entries for a grid of {n}",
                mask_bytes.len()
            )));
        }
        let surface_distance = bytes_f64(&read(&dir.join(DISTANCE_FILE))?, n, DISTANCE_FILE)?;
        Ok(TrapResult {
            axes: params.axes,
            levels,
            mask: mask_bytes.into_iter().map(|b| b != 0).collect(),
            surface_distance,
            surfaces: params.surfaces,
            mass: params.mass_kg,
            member_powers: params.member_powers,
            hash: params.hash,
            config: params.config,
        })
    }
}
