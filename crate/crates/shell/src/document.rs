//! The versioned JSON document holding a structure, its cell history and a
//! self-stress basis.

use serde::{Deserialize, Serialize};
use tensegrid_core::cells::MemberGroup;
use tensegrid_core::geom::Point;
use tensegrid_core::model::{CellRecord, Member, MemberId, Node, NodeId, Structure};
use tensegrid_core::stress::{StateSource, StressBasis};

pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DocumentError {
    #[error("cannot parse document: {0}")]
    ParseError(String),
    #[error("document version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("invalid document: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocNode {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocMember {
    pub id: MemberId,
    pub ends: [NodeId; 2],
    pub removed: bool,
    pub group: MemberGroup,
}

/// Basis columns over the active members listed in `members`. Entries are
/// decimal strings that parse back to the identical `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfStress {
    pub dim: usize,
    pub members: Vec<MemberId>,
    pub columns: Vec<Vec<String>>,
    pub sources: Vec<StateSource>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub version: u32,
    pub dimension: u32,
    pub nodes: Vec<DocNode>,
    pub members: Vec<DocMember>,
    pub cells: Vec<CellRecord>,
    pub self_stress: SelfStress,
    #[serde(default)]
    pub meta: Meta,
}

fn encode(v: f64) -> String {
    // Shortest representation that parses back to the same value.
    format!("{v:?}")
}

fn decode(s: &str) -> Result<f64, DocumentError> {
    let v: f64 = s.parse().map_err(|_| DocumentError::ParseError(format!("bad number {s:?}")))?;
    if !v.is_finite() {
        return Err(DocumentError::ParseError(format!("non-finite number {s:?}")));
    }
    Ok(v)
}

impl Document {
    pub fn new(structure: &Structure, basis: &StressBasis, meta: Meta) -> Self {
        let nodes = structure.nodes().iter().map(|n| DocNode { id: n.id, x: n.point.x, y: n.point.y }).collect();
        let members = structure
            .members()
            .iter()
            .map(|m| DocMember { id: m.id, ends: [m.ends.0, m.ends.1], removed: m.removed, group: m.group })
            .collect();
        let columns = basis.columns().into_iter().map(|c| c.into_iter().map(encode).collect()).collect();
        Self {
            version: VERSION,
            dimension: 2,
            nodes,
            members,
            cells: structure.cells().to_vec(),
            self_stress: SelfStress {
                dim: basis.dim(),
                members: basis.member_ids.clone(),
                columns,
                sources: basis.sources.clone(),
            },
            meta,
        }
    }

    pub fn to_parts(&self) -> Result<(Structure, StressBasis), DocumentError> {
        if self.version != VERSION {
            return Err(DocumentError::VersionMismatch { found: self.version, expected: VERSION });
        }
        if self.dimension != 2 {
            return Err(DocumentError::Invalid(format!("dimension {} is not 2", self.dimension)));
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let point = Point::try_new(n.x, n.y).map_err(|e| DocumentError::Invalid(e.to_string()))?;
            nodes.push(Node { id: n.id, point });
        }
        let members = self
            .members
            .iter()
            .map(|m| Member { id: m.id, ends: (m.ends[0], m.ends[1]), removed: m.removed, group: m.group })
            .collect();
        let structure = Structure::from_parts(nodes, members, self.cells.clone())
            .map_err(|e| DocumentError::Invalid(e.to_string()))?;

        let s = &self.self_stress;
        if s.columns.len() != s.dim || s.sources.len() != s.dim {
            return Err(DocumentError::Invalid(format!(
                "self_stress dim {} with {} columns and {} sources",
                s.dim,
                s.columns.len(),
                s.sources.len()
            )));
        }
        if s.members != structure.active_member_ids() {
            return Err(DocumentError::Invalid("basis rows must be the active members in id order".into()));
        }
        let mut columns = Vec::with_capacity(s.dim);
        for col in &s.columns {
            if col.len() != s.members.len() {
                return Err(DocumentError::Invalid(format!("column of length {} for {} rows", col.len(), s.members.len())));
            }
            columns.push(col.iter().map(|v| decode(v)).collect::<Result<Vec<f64>, _>>()?);
        }
        let basis = StressBasis::from_columns(s.members.clone(), &columns, s.sources.clone());
        Ok((structure, basis))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("documents always serialize");
        text.push('\n');
        text
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, DocumentError> {
        // Check the version before the full schema so old files get a clear error.
        let raw: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| DocumentError::ParseError(e.to_string()))?;
        let version = raw.get("version").and_then(|v| v.as_u64());
        match version {
            Some(v) if v == VERSION as u64 => {}
            Some(v) => return Err(DocumentError::VersionMismatch { found: v as u32, expected: VERSION }),
            None => return Err(DocumentError::ParseError("missing version".into())),
        }
        serde_json::from_value(raw).map_err(|e| DocumentError::ParseError(e.to_string()))
    }
}

pub fn save(structure: &Structure, basis: &StressBasis, meta: Meta) -> Vec<u8> {
    Document::new(structure, basis, meta).to_json().into_bytes()
}

pub fn load(bytes: &[u8]) -> Result<(Structure, StressBasis, Meta), DocumentError> {
    let doc = Document::from_json(bytes)?;
    let (structure, basis) = doc.to_parts()?;
    Ok((structure, basis, doc.meta))
}
