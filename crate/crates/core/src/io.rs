//! JSON files for plants, controllers and plain state-space systems.
//!
//! Matrices are arrays of rows. Numbers are written in shortest round-trip
//! form, so a save/load cycle reproduces every entry bit for bit.
//!
//! Plant files carry `n, m1, m2, p1, p2` and the nine blocks `A .. D22`;
//! absent D blocks are zero. Controller files carry `nK, AK, BK, CK, DK`.
//! Files with `A, B, C, D` and no `B1` are read as plain systems.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{to_rows, Matrix};
use crate::statespace::{Controller, Plant, PlantBlocks, StateSpace};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantFile {
    n: usize,
    m1: usize,
    m2: usize,
    p1: usize,
    p2: usize,
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B1")]
    b1: Rows,
    #[serde(rename = "B2")]
    b2: Rows,
    #[serde(rename = "C1")]
    c1: Rows,
    #[serde(rename = "C2")]
    c2: Rows,
    #[serde(rename = "D11", default, skip_serializing_if = "Option::is_none")]
    d11: Option<Rows>,
    #[serde(rename = "D12", default, skip_serializing_if = "Option::is_none")]
    d12: Option<Rows>,
    #[serde(rename = "D21", default, skip_serializing_if = "Option::is_none")]
    d21: Option<Rows>,
    #[serde(rename = "D22", default, skip_serializing_if = "Option::is_none")]
    d22: Option<Rows>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerFile {
    #[serde(rename = "nK")]
    nk: usize,
    #[serde(rename = "AK")]
    ak: Rows,
    #[serde(rename = "BK")]
    bk: Rows,
    #[serde(rename = "CK")]
    ck: Rows,
    #[serde(rename = "DK")]
    dk: Rows,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D")]
    d: Rows,
}

/// Contents of a file accepted by [`load_system`].
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum SystemData {
    Plant(Plant),
    StateSpace(StateSpace),
}

fn parse_error(context: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    }
}

/// Builds a `rows x cols` matrix, naming `block` on any shape error.
fn matrix(block: &str, data: &Rows, rows: usize, cols: usize) -> Result<Matrix> {
    if data.len() != rows {
        return Err(Error::dims(
            block,
            (rows, cols),
            (data.len(), data.first().map_or(cols, Vec::len)),
        ));
    }
    if let Some(bad) = data.iter().find(|r| r.len() != cols) {
        return Err(Error::dims(block, (rows, cols), (rows, bad.len())));
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| data[i][j]))
}

fn optional(block: &str, data: &Option<Rows>, rows: usize, cols: usize) -> Result<Matrix> {
    match data {
        Some(d) => matrix(block, d, rows, cols),
        None => Ok(Matrix::zeros(rows, cols)),
    }
}

fn rows_of(m: &Matrix) -> Rows {
    to_rows(m.as_ref())
}

pub fn plant_from_json(text: &str) -> Result<Plant> {
    let f: PlantFile = serde_json::from_str(text).map_err(|e| parse_error("plant", e))?;
    let PlantFile { n, m1, m2, p1, p2, .. } = f;
    Plant::new(PlantBlocks {
        a: matrix("A", &f.a, n, n)?,
        b1: matrix("B1", &f.b1, n, m1)?,
        b2: matrix("B2", &f.b2, n, m2)?,
        c1: matrix("C1", &f.c1, p1, n)?,
        c2: matrix("C2", &f.c2, p2, n)?,
        d11: optional("D11", &f.d11, p1, m1)?,
        d12: optional("D12", &f.d12, p1, m2)?,
        d21: optional("D21", &f.d21, p2, m1)?,
        d22: optional("D22", &f.d22, p2, m2)?,
    })
}

pub fn plant_to_json(plant: &Plant) -> String {
    let d = plant.dims();
    let f = PlantFile {
        n: d.n,
        m1: d.m1,
        m2: d.m2,
        p1: d.p1,
        p2: d.p2,
        a: rows_of(&plant.a),
        b1: rows_of(&plant.b1),
        b2: rows_of(&plant.b2),
        c1: rows_of(&plant.c1),
        c2: rows_of(&plant.c2),
        d11: Some(rows_of(&plant.d11)),
        d12: Some(rows_of(&plant.d12)),
        d21: Some(rows_of(&plant.d21)),
        d22: Some(rows_of(&plant.d22)),
    };
    serde_json::to_string_pretty(&f).expect("plant serializes")
}

/// Parses a controller. `DK` fixes the input/output counts, so it must have
/// at least one row.
pub fn controller_from_json(text: &str) -> Result<Controller> {
    let f: ControllerFile = serde_json::from_str(text).map_err(|e| parse_error("controller", e))?;
    let m2 = f.dk.len();
    let p2 = f.dk.first().map_or(0, Vec::len);
    if m2 == 0 || p2 == 0 {
        return Err(Error::dims("DK", (1, 1), (m2, p2)));
    }
    let nk = f.nk;
    Controller::new(
        matrix("AK", &f.ak, nk, nk)?,
        matrix("BK", &f.bk, nk, p2)?,
        matrix("CK", &f.ck, m2, nk)?,
        matrix("DK", &f.dk, m2, p2)?,
    )
}

pub fn controller_to_json(k: &Controller) -> String {
    let f = ControllerFile {
        nk: k.order(),
        ak: rows_of(&k.ak),
        bk: rows_of(&k.bk),
        ck: rows_of(&k.ck),
        dk: rows_of(&k.dk),
    };
    serde_json::to_string_pretty(&f).expect("controller serializes")
}

pub fn state_space_from_json(text: &str) -> Result<StateSpace> {
    let f: SystemFile = serde_json::from_str(text).map_err(|e| parse_error("system", e))?;
    let n = f.a.len();
    let m = f.b.first().map_or(0, Vec::len);
    let p = f.c.len();
    StateSpace::new(
        matrix("A", &f.a, n, n)?,
        matrix("B", &f.b, n, m)?,
        matrix("C", &f.c, p, n)?,
        matrix("D", &f.d, p, m)?,
    )
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_plant(path: impl AsRef<Path>) -> Result<Plant> {
    plant_from_json(&read(path.as_ref())?)
}

pub fn save_plant(path: impl AsRef<Path>, plant: &Plant) -> Result<()> {
    write(path.as_ref(), &plant_to_json(plant))
}

pub fn load_controller(path: impl AsRef<Path>) -> Result<Controller> {
    controller_from_json(&read(path.as_ref())?)
}

pub fn save_controller(path: impl AsRef<Path>, k: &Controller) -> Result<()> {
    write(path.as_ref(), &controller_to_json(k))
}

/// Loads either a plant file or a plain `A, B, C, D` system file.
pub fn load_system(path: impl AsRef<Path>) -> Result<SystemData> {
    let text = read(path.as_ref())?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_error("system", e))?;
    if value.get("B1").is_some() {
        Ok(SystemData::Plant(plant_from_json(&text)?))
    } else {
        Ok(SystemData::StateSpace(state_space_from_json(&text)?))
    }
}
