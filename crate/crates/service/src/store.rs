//! File-backed project store. Each project lives in one JSON document under
//! the data directory, replaced atomically (temp file, fsync, rename).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use storyframe::blueprint::{Blueprint, Canvas, Override};
use storyframe::model::{LayoutKind, StoryFrame};

pub const PROJECT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub source_text: String,
    pub goal: String,
    /// Seed of the last stylization suggestion; also seeds the mock provider.
    pub seed: u64,
    pub revision: u64,
    pub frame: StoryFrame,
    #[serde(default)]
    pub chosen_layout: Option<LayoutKind>,
    #[serde(default)]
    pub canvas: Option<Canvas>,
    #[serde(default)]
    pub blueprint: Option<Blueprint>,
    #[serde(default)]
    pub overrides: Vec<Override>,
}

#[derive(Serialize)]
struct FileOut<'a> {
    schema_version: u32,
    project: &'a Project,
}

#[derive(Deserialize)]
struct FileIn {
    schema_version: u32,
    project: Project,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
    #[error("stale revision: project is at {current}, change was based on {base}")]
    Stale { current: u64, base: u64 },
    #[error("project `{0}` not found")]
    NotFound(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

pub struct ProjectStore {
    dir: PathBuf,
    projects: RwLock<BTreeMap<String, Arc<Project>>>,
    next_id: Mutex<u64>,
}

impl ProjectStore {
    /// Opens (creating if needed) a data directory and loads every project in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut projects = BTreeMap::new();
        let mut max_id = 0;
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let file: FileIn =
                serde_json::from_str(&text).map_err(|e| StoreError::Corrupt { path: path.clone(), message: e.to_string() })?;
            if file.schema_version != PROJECT_SCHEMA_VERSION {
                return Err(StoreError::Corrupt {
                    path,
                    message: format!("unsupported schema_version {}", file.schema_version),
                });
            }
            if let Some(n) = file.project.id.strip_prefix('p').and_then(|n| n.parse::<u64>().ok()) {
                max_id = max_id.max(n);
            }
            projects.insert(file.project.id.clone(), Arc::new(file.project));
        }
        Ok(ProjectStore { dir, projects: RwLock::new(projects), next_id: Mutex::new(max_id + 1) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, id: &str) -> Result<Arc<Project>, StoreError> {
        self.projects.read().unwrap().get(id).cloned().ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn ids(&self) -> Vec<String> {
        self.projects.read().unwrap().keys().cloned().collect()
    }

    pub fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn persist(&self, project: &Project) -> Result<(), StoreError> {
        let path = self.path_of(&project.id);
        let tmp = self.dir.join(format!(".{}.json.tmp", project.id));
        let mut text = serde_json::to_string_pretty(&FileOut { schema_version: PROJECT_SCHEMA_VERSION, project })
            .expect("projects always serialize");
        text.push('\n');
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        if let Ok(d) = fs::File::open(&self.dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }

    /// Stores a new project under the next free id `p1`, `p2`, ... at revision 1.
    pub fn create(&self, mut project: Project) -> Result<Arc<Project>, StoreError> {
        let mut next = self.next_id.lock().unwrap();
        project.id = format!("p{}", *next);
        project.revision = 1;
        self.persist(&project)?;
        *next += 1;
        let project = Arc::new(project);
        self.projects.write().unwrap().insert(project.id.clone(), project.clone());
        Ok(project)
    }

    /// Replaces `base` with `next` at `base.revision + 1`, unless another
    /// change was committed since `base` was read.
    pub fn commit(&self, base: &Project, mut next: Project) -> Result<Arc<Project>, StoreError> {
        let mut projects = self.projects.write().unwrap();
        let current = projects.get(&base.id).ok_or_else(|| StoreError::NotFound(base.id.clone()))?;
        if current.revision != base.revision {
            return Err(StoreError::Stale { current: current.revision, base: base.revision });
        }
        next.id = base.id.clone();
        next.revision = base.revision + 1;
        self.persist(&next)?;
        let next = Arc::new(next);
        projects.insert(next.id.clone(), next.clone());
        Ok(next)
    }
}
