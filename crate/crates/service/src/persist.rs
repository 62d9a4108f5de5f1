//! Directory-backed session snapshots: one directory per session holding
//! `manifest.json`, `roadmap.json` and the map or graph payload.

use std::fs;
use std::path::{Path, PathBuf};

use paretoplan_core::geometry::{encode_pgm, load_grid};
use paretoplan_core::io::GraphInput;
use paretoplan_core::roadmap::Roadmap;
use serde::{Deserialize, Serialize};

use crate::api::{MapInfo, PlanRequest, SessionParams};
use crate::session::{Session, Workspace};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionManifest {
    pub id: String,
    pub roadmap_hash: String,
    pub params: SessionParams,
    pub map: Option<MapInfo>,
    pub last_plan: Option<PlanRequest>,
    pub selected: Option<usize>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    // write-then-rename so a crash never leaves a truncated file behind
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn session_dir(root: &Path, id: &str) -> PathBuf {
    root.join(id)
}

/// Writes the payload files; called once when the session is created.
pub fn save_payload(root: &Path, session: &Session) -> Result<(), String> {
    let dir = session_dir(root, &session.id);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let ws = &session.workspace;
    write(&dir.join("roadmap.json"), ws.roadmap().to_json().as_bytes())?;
    if let Some(grid) = &ws.grid {
        write(&dir.join("map.pgm"), &encode_pgm(grid))?;
    }
    if let Some(input) = &ws.graph_input {
        let text = serde_json::to_vec(input.as_ref()).map_err(|e| e.to_string())?;
        write(&dir.join("graph.json"), &text)?;
    }
    save_manifest(root, session)
}

/// Rewrites the manifest; called after every state change.
pub fn save_manifest(root: &Path, session: &Session) -> Result<(), String> {
    let dir = session_dir(root, &session.id);
    let ws = &session.workspace;
    let manifest = SessionManifest {
        id: session.id.clone(),
        roadmap_hash: ws.roadmap().content_hash(),
        params: ws.params.clone(),
        map: ws.map_info(),
        last_plan: session.latest.as_ref().map(|r| r.request.clone()),
        selected: session.selected,
    };
    let text = serde_json::to_vec_pretty(&manifest).map_err(|e| e.to_string())?;
    write(&dir.join("manifest.json"), &text)
}

/// A persisted session with its workspace rebuilt; the last plan is
/// recomputed by the caller.
pub struct Restored {
    pub manifest: SessionManifest,
    pub workspace: Workspace,
}

pub fn load_session(dir: &Path) -> Result<Restored, String> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read(&p).map_err(|e| io_err(&p, e))
    };
    let manifest: SessionManifest = serde_json::from_slice(&read("manifest.json")?)
        .map_err(|e| io_err(&dir.join("manifest.json"), e))?;
    let grid = match &manifest.map {
        Some(info) => Some(
            load_grid(&read("map.pgm")?, info.resolution, info.origin)
                .map_err(|e| e.to_string())?,
        ),
        None => None,
    };
    let graph_input = if grid.is_none() {
        let bytes = read("graph.json")?;
        Some(GraphInput::from_json(&String::from_utf8_lossy(&bytes)).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let roadmap = Roadmap::from_json(&String::from_utf8_lossy(&read("roadmap.json")?))
        .map_err(|e| e.to_string())?;
    if roadmap.content_hash() != manifest.roadmap_hash {
        return Err(format!("{}: roadmap hash mismatch", dir.display()));
    }
    let workspace = Workspace::restore(manifest.params.clone(), grid, graph_input, Some(roadmap))
        .map_err(|e| e.message)?;
    if workspace.roadmap().content_hash() != manifest.roadmap_hash {
        return Err(format!(
            "{}: rebuilt roadmap differs from the snapshot",
            dir.display()
        ));
    }
    Ok(Restored {
        manifest,
        workspace,
    })
}

/// Every loadable session directory under `root`, with the reasons for the
/// ones that failed.
pub fn load_all(root: &Path) -> (Vec<Restored>, Vec<String>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    let Ok(entries) = fs::read_dir(root) else {
        return (ok, failed);
    };
    let mut dirs: Vec<PathBuf> = entries
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        match load_session(&dir) {
            Ok(r) => ok.push(r),
            Err(e) => failed.push(e),
        }
    }
    (ok, failed)
}
