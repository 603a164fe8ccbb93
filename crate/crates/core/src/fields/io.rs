//! Field-map directories: `meta.json` plus `e_plus.bin`.
//!
//! `e_plus.bin` holds little-endian f64 pairs `(re, im)`, component-major,
//! then x, then y, then z (z fastest).

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Direction, FieldMap, GridAxes};
use crate::{Error, Result};

pub const FIELD_FORMAT_VERSION: u32 = 1;
pub const META_FILE: &str = "meta.json";
pub const DATA_FILE: &str = "e_plus.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub format_version: u32,
    pub wavelength_m: f64,
    #[serde(rename = "P_ref_W")]
    pub p_ref_w: f64,
    pub direction: Direction,
    pub axes: GridAxes,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub translation_invariant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation_constant_per_m: Option<f64>,
}

impl FieldMeta {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(META_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: FieldMeta = serde_json::from_str(&text)
            .map_err(|e| Error::FieldMap(format!("{}: {e}", path.display())))?;
        if meta.format_version != FIELD_FORMAT_VERSION {
            return Err(Error::FieldMap(format!(
                "{}: unsupported format_version {}",
                path.display(),
                meta.format_version
            )));
        }
        meta.axes
            .validate()
            .map_err(|e| Error::FieldMap(format!("{}: {e}", path.display())))?;
        Ok(meta)
    }
}

/// Packs field values into the on-disk byte layout.
pub fn encode_values(values: &[[Complex64; 3]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 48);
    for k in 0..3 {
        for v in values {
            out.extend_from_slice(&v[k].re.to_le_bytes());
            out.extend_from_slice(&v[k].im.to_le_bytes());
        }
    }
    out
}

fn decode_values(bytes: &[u8], points: usize) -> Result<Vec<[Complex64; 3]>> {
    let expected = points * 48;
    if bytes.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "{DATA_FILE} has {} bytes, grid requires {expected}",
            bytes.len()
        )));
    }
    let read = |offset: usize| f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
    let mut values = vec![[Complex64::new(0.0, 0.0); 3]; points];
    for k in 0..3 {
        for (p, v) in values.iter_mut().enumerate() {
            let offset = 16 * (k * points + p);
            v[k] = Complex64::new(read(offset), read(offset + 8));
        }
    }
    Ok(values)
}

pub fn read_fieldmap(dir: impl AsRef<Path>) -> Result<FieldMap> {
    let dir = dir.as_ref();
    let meta = FieldMeta::read(dir)?;
    let path = dir.join(DATA_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let values = decode_values(&bytes, meta.axes.len())?;
    let mut map = FieldMap::new(meta.wavelength_m, meta.p_ref_w, meta.direction, meta.axes, values)?;
    map.translation_invariant = meta.translation_invariant;
    map.propagation_constant = meta.propagation_constant_per_m;
    Ok(map)
}

pub fn write_fieldmap(map: &FieldMap, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = FieldMeta {
        format_version: FIELD_FORMAT_VERSION,
        wavelength_m: map.wavelength,
        p_ref_w: map.p_ref,
        direction: map.direction,
        axes: map.axes.clone(),
        translation_invariant: map.translation_invariant,
        propagation_constant_per_m: map.propagation_constant,
    };
    let meta_path = dir.join(META_FILE);
    let text = serde_json::to_string_pretty(&meta)?;
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
    let data_path = dir.join(DATA_FILE);
    fs::write(&data_path, encode_values(map.values())).map_err(|e| Error::io(&data_path, e))?;
    Ok(())
}
