use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};

use mammo_core::inference::CaseAssessment;
use mammo_core::manifest::Manifest;
use mammo_core::pipeline;
use mammo_core::report::EvalConfig;
use mammo_core::store::Store;
use mammo_core::study::{
    append_jsonl, auto_accept_ids, read_jsonl, read_sus_csv, write_sus_csv, ConcordanceRecord, ReviewRecord,
    SusResponse,
};
use mammo_core::types::Case;

use crate::ServiceError;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub store: PathBuf,
    pub port: u16,
    /// Hide ground truth from case details.
    pub blinded: bool,
    /// Reviewer ids; added to any existing session roster.
    pub reviewers: Vec<String>,
    pub seed: u64,
    pub eval: EvalConfig,
    /// Built review UI to serve at `/`.
    pub ui_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(store: impl Into<PathBuf>) -> Self {
        Self {
            store: store.into(),
            port: 8080,
            blinded: true,
            reviewers: Vec::new(),
            seed: mammo_core::metrics::bootstrap::DEFAULT_SEED,
            eval: EvalConfig::default(),
            ui_dir: None,
        }
    }
}

/// Reviewer roster and per-reviewer case order, persisted as `session.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySession {
    pub session_id: String,
    pub dataset_id: String,
    pub seed: u64,
    pub queues: BTreeMap<String, Vec<String>>,
}

/// FNV-1a, so a reviewer's queue does not depend on roster order.
fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl StudySession {
    pub fn new(dataset_id: &str, seed: u64) -> Self {
        Self {
            session_id: format!("{dataset_id}-{seed}"),
            dataset_id: dataset_id.to_string(),
            seed,
            queues: BTreeMap::new(),
        }
    }

    /// Adds `reviewer` with a seeded shuffle of `cases` unless already present.
    pub fn add_reviewer(&mut self, reviewer: &str, cases: &BTreeSet<String>) {
        if self.queues.contains_key(reviewer) {
            return;
        }
        let mut order: Vec<String> = cases.iter().cloned().collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed ^ stable_hash(reviewer)));
        self.queues.insert(reviewer.to_string(), order);
    }
}

pub(crate) struct CaseEntry {
    pub case: Case,
    pub assessment: CaseAssessment,
    pub concordance: ConcordanceRecord,
}

enum Job {
    Review(ReviewRecord, oneshot::Sender<Result<u64, String>>),
    Sus(SusResponse, oneshot::Sender<Result<u64, String>>),
}

pub(crate) struct Inner {
    pub store: Store,
    pub blinded: bool,
    pub eval: EvalConfig,
    pub cases: BTreeMap<String, CaseEntry>,
    pub concordance: Vec<ConcordanceRecord>,
    pub auto_accepted: BTreeSet<String>,
    pub session: StudySession,
    pub reviews: Arc<RwLock<Vec<ReviewRecord>>>,
    pub sus: Arc<RwLock<Vec<SusResponse>>>,
    jobs: mpsc::Sender<Job>,
}

#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

/// Cuts a final line that lacks its newline, left by an interrupted append.
/// Acknowledged records always end in a newline, so nothing acknowledged is lost.
fn repair_tail(path: &Path) -> std::io::Result<()> {
    let Ok(mut f) = OpenOptions::new().read(true).write(true).open(path) else {
        return Ok(());
    };
    let len = f.metadata()?.len();
    if len == 0 {
        return Ok(());
    }
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    if buf.last() == Some(&b'\n') {
        return Ok(());
    }
    let keep = buf.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    f.set_len(keep as u64)?;
    f.seek(SeekFrom::End(0))?;
    f.sync_all()
}

impl AppState {
    /// Loads the store, builds or reloads the session and starts the log writer.
    pub fn load(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let store =
            Store::open(&cfg.store).map_err(|_| ServiceError::StoreNotFound(cfg.store.display().to_string()))?;
        let manifest: Manifest = store.load_manifest()?;
        let assessments = pipeline::load_assessments(&store, &manifest)?;
        let mut concordance: Vec<ConcordanceRecord> = read_jsonl(&store.concordance_path())?;
        if concordance.is_empty() {
            concordance = pipeline::concordance(&store, &manifest, &cfg.eval)?;
        }
        let by_case: BTreeMap<&str, &ConcordanceRecord> = concordance.iter().map(|r| (r.case_id.as_str(), r)).collect();

        let mut cases = BTreeMap::new();
        for case in &manifest.cases {
            let assessment = assessments[&case.case_id].clone();
            let rec = by_case
                .get(case.case_id.as_str())
                .ok_or_else(|| ServiceError::Startup(format!("no concordance record for case {}", case.case_id)))?;
            cases.insert(
                case.case_id.clone(),
                CaseEntry { case: case.clone(), assessment, concordance: (*rec).clone() },
            );
        }
        let auto_accepted = auto_accept_ids(&concordance);
        let reviewable: BTreeSet<String> = cases.keys().filter(|id| !auto_accepted.contains(*id)).cloned().collect();

        let session_path = store.session_path();
        let mut session = if session_path.exists() {
            store.read_json(&session_path)?
        } else {
            StudySession::new(&manifest.dataset_id, cfg.seed)
        };
        let before = session.clone();
        for r in &cfg.reviewers {
            session.add_reviewer(r, &reviewable);
        }
        if session != before || !session_path.exists() {
            store.write_json(&session_path, &session)?;
        }

        let reviews_path = store.reviews_path();
        repair_tail(&reviews_path).map_err(|e| ServiceError::Startup(format!("{}: {e}", reviews_path.display())))?;
        let reviews = Arc::new(RwLock::new(read_jsonl::<ReviewRecord>(&reviews_path)?));
        let sus_path = store.sus_path();
        let sus = Arc::new(RwLock::new(if sus_path.exists() { read_sus_csv(&sus_path)? } else { Vec::new() }));

        let (tx, rx) = mpsc::channel(256);
        spawn_writer(rx, reviews_path, sus_path, reviews.clone(), sus.clone());

        Ok(Self(Arc::new(Inner {
            store,
            blinded: cfg.blinded,
            eval: cfg.eval.clone(),
            cases,
            concordance,
            auto_accepted,
            session,
            reviews,
            sus,
            jobs: tx,
        })))
    }

    /// Appends a review to the log; resolves once the line is on disk.
    pub(crate) async fn submit_review(&self, record: ReviewRecord) -> Result<u64, ServiceError> {
        let (tx, rx) = oneshot::channel();
        self.0.jobs.send(Job::Review(record, tx)).await.map_err(|_| ServiceError::WriterGone)?;
        rx.await.map_err(|_| ServiceError::WriterGone)?.map_err(ServiceError::Persist)
    }

    pub(crate) async fn submit_sus(&self, response: SusResponse) -> Result<u64, ServiceError> {
        let (tx, rx) = oneshot::channel();
        self.0.jobs.send(Job::Sus(response, tx)).await.map_err(|_| ServiceError::WriterGone)?;
        rx.await.map_err(|_| ServiceError::WriterGone)?.map_err(ServiceError::Persist)
    }
}

/// The only code that writes the study logs. Each job is made durable before
/// the in-memory snapshot is updated and the caller is answered.
fn spawn_writer(
    mut rx: mpsc::Receiver<Job>,
    reviews_path: PathBuf,
    sus_path: PathBuf,
    reviews: Arc<RwLock<Vec<ReviewRecord>>>,
    sus: Arc<RwLock<Vec<SusResponse>>>,
) {
    std::thread::Builder::new()
        .name("study-log-writer".into())
        .spawn(move || {
            while let Some(job) = rx.blocking_recv() {
                match job {
                    Job::Review(rec, reply) => {
                        let res = append_jsonl(&reviews_path, &rec).map(|_| {
                            let mut log = reviews.write().expect("review snapshot lock");
                            log.push(rec);
                            log.len() as u64
                        });
                        let _ = reply.send(res.map_err(|e| e.to_string()));
                    }
                    Job::Sus(resp, reply) => {
                        let mut next = sus.read().expect("sus snapshot lock").clone();
                        match next.iter_mut().find(|r| r.participant_id == resp.participant_id) {
                            Some(slot) => *slot = resp,
                            None => next.push(resp),
                        }
                        let res = write_sus_csv(&sus_path, &next).map(|_| {
                            let n = next.len() as u64;
                            *sus.write().expect("sus snapshot lock") = next;
                            n
                        });
                        let _ = reply.send(res.map_err(|e| e.to_string()));
                    }
                }
            }
        })
        .expect("spawn writer thread");
}
