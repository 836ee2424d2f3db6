//! Conversions between frames, parametric maps and QUSD records.
//!
//! Every record carries a `kind` string. Frame-like records hold `grid` and
//! `params`; records with a parametric tensor hold a `parametric` block
//! naming the statistic (which is also the tensor name), window and source grid.

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::container::{SampleRecord, Tensor};
use crate::classify::{ClassMap, SpeckleClass};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;
use crate::sim::{EnvelopeFrame, ImagingParams};
use crate::stats::{ParametricImage, Statistic, WindowSpec};

pub mod kind {
    pub const SAMPLE: &str = "sample";
    pub const FRAME: &str = "frame";
    pub const PARAMETRIC: &str = "parametric";
    pub const CLASS_MAP: &str = "class_map";
}

pub mod tensor {
    pub const RF: &str = "rf";
    pub const ENVELOPE: &str = "envelope";
    pub const BMODE: &str = "bmode";
    pub const SC_MASK: &str = "sc_mask";
    pub const MS_MASK: &str = "ms_mask";
    pub const CLASS: &str = "class";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametricMeta {
    pub statistic: Statistic,
    pub window: WindowSpec,
    pub source_grid: GridSpec,
}

pub fn insert<S: Serialize>(meta: &mut Map<String, Value>, key: &str, value: &S) -> Result<()> {
    meta.insert(key.to_owned(), serde_json::to_value(value)?);
    Ok(())
}

pub fn meta_field<D: DeserializeOwned>(rec: &SampleRecord, key: &str) -> Result<D> {
    let v = rec.meta.get(key).ok_or_else(|| Error::Format(format!("metadata lacks {key:?}")))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Format(format!("metadata {key:?}: {e}")))
}

pub fn record_kind(rec: &SampleRecord) -> Option<&str> {
    rec.meta.get("kind").and_then(Value::as_str)
}

fn base(kind: &str) -> Map<String, Value> {
    let mut meta = Map::new();
    meta.insert("kind".into(), Value::from(kind));
    meta
}

/// Adds a parametric tensor and its description to a record.
pub fn attach_parametric<T: Real>(rec: &mut SampleRecord, image: &ParametricImage<T>) -> Result<()> {
    let meta = ParametricMeta { statistic: image.statistic, window: image.window, source_grid: image.source_grid };
    insert(&mut rec.meta, "parametric", &meta)?;
    rec.push(Tensor::f32_from(image.statistic.name(), image.values.view()));
    Ok(())
}

pub fn envelope_record<T: Real>(env: &EnvelopeFrame<T>) -> Result<SampleRecord> {
    let mut rec = SampleRecord::new(base(kind::FRAME));
    insert(&mut rec.meta, "grid", &env.grid)?;
    insert(&mut rec.meta, "params", &env.params)?;
    rec.push(Tensor::f32_from(tensor::ENVELOPE, env.data.view()));
    Ok(rec)
}

/// Reads the envelope of a sample or frame record.
pub fn read_envelope<T: Real>(rec: &SampleRecord) -> Result<EnvelopeFrame<T>> {
    let grid: GridSpec = meta_field(rec, "grid")?;
    let params: ImagingParams = meta_field(rec, "params")?;
    let data: Array2<T> = rec.require(tensor::ENVELOPE)?.to_array()?;
    if data.dim() != grid.dim() {
        return Err(Error::Format(format!("envelope is {:?} but grid is {:?}", data.dim(), grid.dim())));
    }
    if data.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::Format("envelope holds negative or non-finite values".into()));
    }
    Ok(EnvelopeFrame { data, grid, params })
}

/// Standalone parametric map. `params` of the source frame are kept when
/// known so the map can be traced back.
pub fn parametric_record<T: Real>(image: &ParametricImage<T>, params: Option<&ImagingParams>) -> Result<SampleRecord> {
    let mut rec = SampleRecord::new(base(kind::PARAMETRIC));
    if let Some(p) = params {
        insert(&mut rec.meta, "params", p)?;
    }
    attach_parametric(&mut rec, image)?;
    Ok(rec)
}

/// Reads the parametric map described by the record's `parametric` block.
pub fn read_parametric<T: Real>(rec: &SampleRecord) -> Result<ParametricImage<T>> {
    let meta: ParametricMeta = meta_field(rec, "parametric")?;
    let values: Array2<T> = rec.require(meta.statistic.name())?.to_array()?;
    let expected = meta.window.output_dim(meta.source_grid.dim())?;
    if values.dim() != expected {
        return Err(Error::Format(format!(
            "parametric tensor is {:?}, window {:?} on {:?} gives {:?}",
            values.dim(),
            meta.window,
            meta.source_grid.dim(),
            expected
        )));
    }
    Ok(ParametricImage { values, statistic: meta.statistic, window: meta.window, source_grid: meta.source_grid })
}

pub fn class_map_record(map: &ClassMap, reference_frames: usize) -> Result<SampleRecord> {
    let mut rec = SampleRecord::new(base(kind::CLASS_MAP));
    insert(&mut rec.meta, "tolerance", &map.tolerance)?;
    insert(&mut rec.meta, "window", &map.window)?;
    insert(&mut rec.meta, "reference_frames", &reference_frames)?;
    rec.meta.insert(
        "codes".into(),
        serde_json::json!({ "0": SpeckleClass::Uds, "1": SpeckleClass::Fds, "2": SpeckleClass::Periodic }),
    );
    rec.push(Tensor::u8_from(tensor::CLASS, map.codes().view()));
    Ok(rec)
}

pub fn read_class_map(rec: &SampleRecord) -> Result<ClassMap> {
    let tolerance: f64 = meta_field(rec, "tolerance")?;
    let window: WindowSpec = meta_field(rec, "window")?;
    let codes = rec.require(tensor::CLASS)?.to_u8_array()?;
    let mut labels = Array2::from_elem(codes.dim(), SpeckleClass::Uds);
    for (l, &c) in labels.iter_mut().zip(codes.iter()) {
        *l = SpeckleClass::from_code(c).ok_or_else(|| Error::Format(format!("unknown class code {c}")))?;
    }
    Ok(ClassMap { labels, tolerance, window })
}
