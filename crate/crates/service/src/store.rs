//! Feed registry with per-feed locking and snapshot persistence.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use limeade_core::{Label, TextCorpus};

use crate::config::ServiceConfig;
use crate::error::{ServiceError, ServiceResult};
use crate::session::{FeedSession, HistoryEntry, RecommendationPage, Snapshot, TermUpdate};

type Shared = Arc<RwLock<FeedSession>>;

/// All feeds of one corpus. Writers of a feed hold its exclusive lock for
/// the whole retrain-and-persist step, so versions never interleave.
pub struct FeedStore {
    corpus: Arc<TextCorpus>,
    cfg: ServiceConfig,
    feeds: RwLock<HashMap<String, Shared>>,
}

fn poisoned<T>(_: T) -> ServiceError {
    ServiceError::Internal("feed lock poisoned".into())
}

/// Ids are generated as UUIDs; anything else cannot name a snapshot file.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

impl FeedStore {
    /// Opens a store, replaying every snapshot found in `cfg.data_dir`.
    pub fn open(corpus: Arc<TextCorpus>, cfg: ServiceConfig) -> ServiceResult<Self> {
        let store = Self {
            corpus,
            cfg,
            feeds: RwLock::new(HashMap::new()),
        };
        if let Some(dir) = store.cfg.data_dir.clone() {
            fs::create_dir_all(&dir)?;
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            let mut feeds = store.feeds.write().map_err(poisoned)?;
            for p in paths {
                let snap: Snapshot = serde_json::from_str(&fs::read_to_string(&p)?)?;
                let session = FeedSession::replay(&store.corpus, &store.cfg, &snap)?;
                feeds.insert(snap.feed_id.clone(), Arc::new(RwLock::new(session)));
            }
            drop(feeds);
        }
        Ok(store)
    }

    pub fn corpus(&self) -> &TextCorpus {
        &self.corpus
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.feeds.read().map_or(0, |f| f.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, id: &str) -> ServiceResult<Shared> {
        self.feeds
            .read()
            .map_err(poisoned)?
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("unknown feed {id}")))
    }

    fn snapshot_path(dir: &Path, id: &str) -> PathBuf {
        dir.join(format!("{id}.json"))
    }

    /// Temp file in the same directory, fsync, then rename over the old one.
    fn persist(&self, session: &FeedSession) -> ServiceResult<()> {
        let Some(dir) = &self.cfg.data_dir else { return Ok(()) };
        if !valid_id(session.feed_id()) {
            return Err(ServiceError::Internal(format!("bad feed id {}", session.feed_id())));
        }
        let target = Self::snapshot_path(dir, session.feed_id());
        let tmp = dir.join(format!(".{}.json.tmp", session.feed_id()));
        let body = serde_json::to_vec_pretty(&session.snapshot())?;
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&body)?;
        f.sync_all()?;
        fs::rename(&tmp, &target)?;
        Ok(())
    }

    pub fn create(&self, seed_doc_ids: &[String]) -> ServiceResult<String> {
        let id = uuid::Uuid::new_v4().to_string();
        let session = FeedSession::create(&self.corpus, &self.cfg, id.clone(), seed_doc_ids)?;
        self.persist(&session)?;
        self.feeds
            .write()
            .map_err(poisoned)?
            .insert(id.clone(), Arc::new(RwLock::new(session)));
        Ok(id)
    }

    pub fn page(&self, id: &str, page: usize, page_size: Option<usize>) -> ServiceResult<RecommendationPage> {
        let shared = self.get(id)?;
        let s = shared.read().map_err(poisoned)?;
        s.page(&self.corpus, &self.cfg, page, page_size.unwrap_or(self.cfg.default_page_size))
    }

    /// Runs a mutation on a scratch copy; the live session and the snapshot
    /// only change if the mutation and the write both succeed.
    fn mutate<T>(&self, id: &str, f: impl FnOnce(&mut FeedSession) -> ServiceResult<T>) -> ServiceResult<T> {
        let shared = self.get(id)?;
        let mut live = shared.write().map_err(poisoned)?;
        let mut next = live.clone();
        let out = f(&mut next)?;
        self.persist(&next)?;
        *live = next;
        Ok(out)
    }

    pub fn rate_paper(&self, id: &str, doc_id: &str, polarity: Label) -> ServiceResult<u64> {
        self.mutate(id, |s| s.rate_paper(&self.corpus, &self.cfg, doc_id, polarity))
    }

    pub fn rate_term(&self, id: &str, term: &str, polarity: Label) -> ServiceResult<TermUpdate> {
        self.mutate(id, |s| s.rate_term(&self.corpus, &self.cfg, term, polarity))
    }

    pub fn history(&self, id: &str) -> ServiceResult<(u64, Vec<HistoryEntry>)> {
        let shared = self.get(id)?;
        let s = shared.read().map_err(poisoned)?;
        Ok((s.version(), s.history().to_vec()))
    }

    /// A copy of the session, for inspection in tests and tools.
    pub fn session(&self, id: &str) -> ServiceResult<FeedSession> {
        let shared = self.get(id)?;
        let s = shared.read().map_err(poisoned)?;
        Ok(s.clone())
    }
}
