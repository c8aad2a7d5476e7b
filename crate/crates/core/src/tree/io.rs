//! Tree persistence: `tree.json` for the skeleton plus one SNPX file per leaf.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GrassmannTree, Leaf, Node, TreeConfig};
use crate::archive::{read_matrix, write_matrix};
use crate::error::{Error, Result};
use crate::pod::PodBasis;

pub const TREE_FILE: &str = "tree.json";
const TREE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TreeFile {
    version: u32,
    dim: usize,
    config: TreeConfig,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NodeRecord {
    Split {
        var: usize,
        value: f64,
        left: usize,
        right: usize,
        node_cost: f64,
        split_cost: f64,
    },
    Leaf {
        region: usize,
        file: String,
        members: Vec<String>,
    },
}

fn reject_empty(dir: &Path) -> Result<()> {
    if dir.as_os_str().is_empty() {
        return Err(Error::io(
            dir,
            io::Error::new(io::ErrorKind::NotFound, "empty path"),
        ));
    }
    Ok(())
}

/// Writes `tree` into directory `dir`.
pub fn serialize(tree: &GrassmannTree, dir: &Path) -> Result<()> {
    reject_empty(dir)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::with_capacity(tree.nodes.len());
    for node in &tree.nodes {
        records.push(match node {
            Node::Split {
                var,
                value,
                left,
                right,
                node_cost,
                split_cost,
            } => NodeRecord::Split {
                var: *var,
                value: *value,
                left: *left,
                right: *right,
                node_cost: *node_cost,
                split_cost: *split_cost,
            },
            Node::Leaf(leaf) => {
                let file = format!("leaf_{:05}.snpx", leaf.region);
                write_matrix(&dir.join(&file), leaf.basis.phi())?;
                NodeRecord::Leaf {
                    region: leaf.region,
                    file,
                    members: leaf.members.clone(),
                }
            }
        });
    }
    let doc = TreeFile {
        version: TREE_VERSION,
        dim: tree.dim,
        config: tree.config.clone(),
        nodes: records,
    };
    let path = dir.join(TREE_FILE);
    let json = serde_json::to_string_pretty(&doc).expect("tree serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Reads a tree written by [`serialize`], checking its structure.
pub fn deserialize(dir: &Path) -> Result<GrassmannTree> {
    reject_empty(dir)?;
    let path = dir.join(TREE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let doc: TreeFile = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if doc.version != TREE_VERSION {
        return Err(Error::format(&path, format!("unsupported tree version {}", doc.version)));
    }
    if doc.nodes.is_empty() {
        return Err(Error::format(&path, "tree has no nodes"));
    }
    let count = doc.nodes.len();
    let mut nodes = Vec::with_capacity(count);
    for record in doc.nodes {
        nodes.push(match record {
            NodeRecord::Split {
                var,
                value,
                left,
                right,
                node_cost,
                split_cost,
            } => {
                if left >= count || right >= count || var >= doc.dim || !value.is_finite() {
                    return Err(Error::format(&path, "split node out of range"));
                }
                Node::Split {
                    var,
                    value,
                    left,
                    right,
                    node_cost,
                    split_cost,
                }
            }
            NodeRecord::Leaf {
                region,
                file,
                members,
            } => {
                let phi = read_matrix(&dir.join(&file))?;
                if phi.cols() != doc.config.rank {
                    return Err(Error::format(
                        &path,
                        format!("leaf {region} has rank {}, tree rank is {}", phi.cols(), doc.config.rank),
                    ));
                }
                Node::Leaf(Leaf {
                    region,
                    basis: PodBasis::new(phi)?,
                    members,
                })
            }
        });
    }
    check_structure(&nodes).map_err(|reason| Error::format(&path, reason))?;
    Ok(GrassmannTree::from_parts(nodes, doc.dim, doc.config))
}

/// Every node reachable from the root exactly once; no cycles.
fn check_structure(nodes: &[Node]) -> std::result::Result<(), String> {
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut seen[i], true) {
            return Err(format!("node {i} reached twice"));
        }
        if let Node::Split { left, right, .. } = nodes[i] {
            stack.push(left);
            stack.push(right);
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(format!("node {i} unreachable from the root")),
        None => Ok(()),
    }
}
