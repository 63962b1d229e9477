//! Elevation rasters in ESRI ASCII grid form and the terrain-obstacle layer.

use std::fmt::Write as _;
use std::io::{self, BufRead};

use thiserror::Error;

use crate::grid::{BinaryLayer, GridError, GridSpec};

#[derive(Debug, Error)]
pub enum DemError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header key `{0}`")]
    MissingHeader(&'static str),
    #[error("expected {expected} values, found {found}")]
    ValueCount { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Elevation grid in meters. Values are stored row-major with the northern
/// row first, as in the ASCII grid format.
#[derive(Clone, Debug, PartialEq)]
pub struct DemRaster {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cell_size: f64,
    pub nodata: f64,
    pub values: Vec<f64>,
}

impl DemRaster {
    pub fn is_nodata(&self, v: f64) -> bool {
        v.is_nan() || v == self.nodata
    }

    /// Elevation at planar position, or `None` outside the raster or on nodata.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let col = (x - self.xll) / self.cell_size;
        let row_from_south = (y - self.yll) / self.cell_size;
        if !(col >= 0.0 && row_from_south >= 0.0) {
            return None;
        }
        let (col, rs) = (col.floor() as usize, row_from_south.floor() as usize);
        if col >= self.ncols || rs >= self.nrows {
            return None;
        }
        let v = self.values[(self.nrows - 1 - rs) * self.ncols + col];
        (!self.is_nodata(v)).then_some(v)
    }

    /// Nearest-neighbour resampling onto `spec`, sampled at cell centers.
    /// Cells outside the source raster become nodata.
    pub fn resample_to(&self, spec: &GridSpec) -> DemRaster {
        let mut values = Vec::with_capacity(spec.len());
        for r in (0..spec.n_rows).rev() {
            let y = spec.center_y(r);
            for c in 0..spec.n_cols {
                values.push(self.sample(spec.center_x(c), y).unwrap_or(self.nodata));
            }
        }
        DemRaster {
            ncols: spec.n_cols,
            nrows: spec.n_rows,
            xll: spec.origin_x,
            yll: spec.origin_y,
            cell_size: spec.cell_size,
            nodata: self.nodata,
            values,
        }
    }

    pub fn to_ascii_grid(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", self.ncols);
        let _ = writeln!(out, "nrows {}", self.nrows);
        let _ = writeln!(out, "xllcorner {}", self.xll);
        let _ = writeln!(out, "yllcorner {}", self.yll);
        let _ = writeln!(out, "cellsize {}", self.cell_size);
        let _ = writeln!(out, "nodata_value {}", self.nodata);
        for row in self.values.chunks(self.ncols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses an ESRI ASCII grid. Header keys are case-insensitive; both the
/// `xllcorner` and `xllcenter` forms are accepted.
pub fn read_ascii_grid<R: BufRead>(reader: R) -> Result<DemRaster, DemError> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut centered = (false, false);
    let mut cell = None;
    let mut nodata = -9999.0;
    let mut values = Vec::new();
    let mut in_body = false;

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !in_body {
            let mut parts = trimmed.split_whitespace();
            let key = parts.next().unwrap_or_default().to_ascii_lowercase();
            let is_header = key.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
            if is_header {
                let val = parts.next().ok_or_else(|| DemError::Parse {
                    line: lineno,
                    message: format!("header `{key}` has no value"),
                })?;
                let num = |v: &str| -> Result<f64, DemError> {
                    v.parse::<f64>().map_err(|_| DemError::Parse {
                        line: lineno,
                        message: format!("bad value {v:?} for `{key}`"),
                    })
                };
                match key.as_str() {
                    "ncols" => ncols = Some(parse_count(val, lineno)?),
                    "nrows" => nrows = Some(parse_count(val, lineno)?),
                    "xllcorner" => xll = Some(num(val)?),
                    "yllcorner" => yll = Some(num(val)?),
                    "xllcenter" => {
                        xll = Some(num(val)?);
                        centered.0 = true;
                    }
                    "yllcenter" => {
                        yll = Some(num(val)?);
                        centered.1 = true;
                    }
                    "cellsize" => cell = Some(num(val)?),
                    "nodata_value" => nodata = num(val)?,
                    _ => {
                        return Err(DemError::Parse {
                            line: lineno,
                            message: format!("unknown header key `{key}`"),
                        })
                    }
                }
                continue;
            }
            in_body = true;
        }
        for tok in trimmed.split_whitespace() {
            let v = tok.parse::<f64>().map_err(|_| DemError::Parse {
                line: lineno,
                message: format!("bad elevation {tok:?}"),
            })?;
            values.push(v);
        }
    }

    let ncols = ncols.ok_or(DemError::MissingHeader("ncols"))?;
    let nrows = nrows.ok_or(DemError::MissingHeader("nrows"))?;
    let cell_size = cell.ok_or(DemError::MissingHeader("cellsize"))?;
    let mut xll = xll.ok_or(DemError::MissingHeader("xllcorner"))?;
    let mut yll = yll.ok_or(DemError::MissingHeader("yllcorner"))?;
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(DemError::Parse {
            line: 0,
            message: format!("cellsize must be positive, got {cell_size}"),
        });
    }
    if centered.0 {
        xll -= cell_size / 2.0;
    }
    if centered.1 {
        yll -= cell_size / 2.0;
    }
    let expected = ncols * nrows;
    if values.len() != expected {
        return Err(DemError::ValueCount {
            expected,
            found: values.len(),
        });
    }
    Ok(DemRaster {
        ncols,
        nrows,
        xll,
        yll,
        cell_size,
        nodata,
        values,
    })
}

fn parse_count(v: &str, line: usize) -> Result<usize, DemError> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(DemError::Parse {
            line,
            message: format!("expected a positive integer, got {v:?}"),
        }),
    }
}

/// Marks cells whose elevation exceeds `max_elevation_m`. The raster must
/// already share the grid's shape (see [`DemRaster::resample_to`]).
pub fn rasterize_dem(spec: GridSpec, dem: &DemRaster, max_elevation_m: f64) -> Result<BinaryLayer, GridError> {
    if !max_elevation_m.is_finite() {
        return Err(GridError::InvalidThreshold(max_elevation_m));
    }
    if dem.nrows != spec.n_rows || dem.ncols != spec.n_cols {
        return Err(GridError::DimensionMismatch {
            rows: spec.n_rows,
            cols: spec.n_cols,
            found_rows: dem.nrows,
            found_cols: dem.ncols,
        });
    }
    let mut cells = vec![0u8; spec.len()];
    for (dem_row, chunk) in dem.values.chunks(dem.ncols).enumerate() {
        let row = spec.n_rows - 1 - dem_row;
        for (col, &v) in chunk.iter().enumerate() {
            if !dem.is_nodata(v) && v > max_elevation_m {
                cells[row * spec.n_cols + col] = 1;
            }
        }
    }
    BinaryLayer::from_cells(spec, cells)
}
