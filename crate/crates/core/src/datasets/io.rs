use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, GraphFile};
use crate::models::Task;

pub const MANIFEST: &str = "dataset.json";
const GROUND_TRUTH: &str = "ground_truth.json";

/// Contents of `dataset.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    pub task: Task,
    pub graphs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_graph_file(path: &Path) -> Result<Graph> {
    let text = read(path)?;
    let file: GraphFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    file.into_graph().map_err(|e| match e {
        Error::InvalidGraph(msg) => Error::InvalidGraph(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_graph_file(g: &Graph, path: &Path) -> Result<()> {
    write(path, &g.to_json())
}

pub fn load_dataset_dir(dir: &Path) -> Result<LabeledDataset> {
    let manifest_path = dir.join(MANIFEST);
    let text = read(&manifest_path)?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::json(&manifest_path, e))?;
    let bad = |message: String| Error::Manifest {
        path: manifest_path.clone(),
        message,
    };
    if manifest.graphs.is_empty() {
        return Err(bad("no graph files listed".into()));
    }
    let mut graphs = Vec::with_capacity(manifest.graphs.len());
    for file in &manifest.graphs {
        let path = dir.join(file);
        if !path.is_file() {
            return Err(bad(format!("graph file {} does not exist", path.display())));
        }
        graphs.push(load_graph_file(&path)?);
    }
    let mut ground_truth = BTreeMap::new();
    if let Some(file) = &manifest.ground_truth {
        let path: PathBuf = dir.join(file);
        if !path.is_file() {
            return Err(bad(format!(
                "ground-truth file {} does not exist",
                path.display()
            )));
        }
        let text = read(&path)?;
        let raw: BTreeMap<String, Vec<EdgeId>> =
            serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
        for (key, edges) in raw {
            let target: usize = key.parse().map_err(|_| {
                bad(format!(
                    "ground-truth key {key:?} in {} is not an index",
                    path.display()
                ))
            })?;
            ground_truth.insert(target, edges);
        }
    }
    let dataset = LabeledDataset {
        name: if manifest.name.is_empty() {
            dir.file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        } else {
            manifest.name
        },
        task: manifest.task,
        graphs,
        ground_truth,
    };
    dataset.validate().map_err(|e| bad(e.to_string()))?;
    Ok(dataset)
}

/// Writes `dataset.json`, one `graph_NNNN.json` per graph, and
/// `ground_truth.json` when the dataset carries ground truth.
pub fn save_dataset_dir(data: &LabeledDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(data.graphs.len());
    for (i, g) in data.graphs.iter().enumerate() {
        let name = format!("graph_{i:04}.json");
        save_graph_file(g, &dir.join(&name))?;
        files.push(name);
    }
    let ground_truth = if data.ground_truth.is_empty() {
        None
    } else {
        let raw: BTreeMap<String, &Vec<EdgeId>> = data
            .ground_truth
            .iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        write(
            &dir.join(GROUND_TRUTH),
            &serde_json::to_string(&raw).expect("serializable"),
        )?;
        Some(GROUND_TRUTH.to_string())
    };
    let manifest = Manifest {
        name: data.name.clone(),
        task: data.task,
        graphs: files,
        ground_truth,
    };
    write(
        &dir.join(MANIFEST),
        &serde_json::to_string_pretty(&manifest).expect("serializable"),
    )
}
