//! JSON encoding of bodies.

use super::body::{ConvexBody, SupportBody};
use super::directions::DirectionGrid;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BodyJson {
    Ellipsoid { m: Vec<f64> },
    Polygon { verts: Vec<[f64; 2]> },
    Support { h: Vec<f64> },
}

impl From<&ConvexBody> for BodyJson {
    fn from(k: &ConvexBody) -> Self {
        match k {
            ConvexBody::Ellipsoid(m) => BodyJson::Ellipsoid { m: m.as_slice().to_vec() },
            ConvexBody::Polygon(p) => BodyJson::Polygon { verts: p.verts().to_vec() },
            ConvexBody::Support(s) => BodyJson::Support { h: s.values().to_vec() },
        }
    }
}

impl BodyJson {
    /// Decode a body of dimension `d`; support values are read on `grid`.
    pub fn into_body(self, d: usize, grid: &Arc<DirectionGrid>) -> Result<ConvexBody> {
        match self {
            BodyJson::Ellipsoid { m } => {
                if m.len() != d * d {
                    return Err(Error::SchemaMismatch(format!("ellipsoid needs {} entries, got {}", d * d, m.len())));
                }
                ConvexBody::ellipsoid(Mat::from_row_major(&m)?)
            }
            BodyJson::Polygon { verts } => {
                if d != 2 {
                    return Err(Error::SchemaMismatch("polygons require d = 2".into()));
                }
                if verts.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::SchemaMismatch("non-finite polygon vertex".into()));
                }
                Ok(ConvexBody::polygon(&verts))
            }
            BodyJson::Support { h } => {
                if grid.dim() != d || h.len() != grid.len() {
                    return Err(Error::SchemaMismatch(format!("support body has {} values, grid {} has {}", h.len(), grid.name(), grid.len())));
                }
                Ok(ConvexBody::Support(SupportBody::new(grid.clone(), h)?))
            }
        }
    }
}
