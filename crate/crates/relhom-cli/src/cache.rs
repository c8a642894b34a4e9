//! On-disk result cache: one JSON file per (inputs, operation, degree)
//! key. Writers stage to a unique temporary file and rename into place, so
//! concurrent jobs never observe a torn entry. A version bump invalidates
//! every existing entry at once.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::report::{presentation_hash, Report};

/// Bump whenever the wire format or any computation convention changes.
const CACHE_VERSION: u32 = 1;

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Serialize, Deserialize)]
struct Entry {
    version: u32,
    report: Report,
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: &Path) -> io::Result<Cache> {
        fs::create_dir_all(dir)?;
        Ok(Cache { dir: dir.to_path_buf() })
    }

    /// Everything that can change the answer goes into the key: version,
    /// operation name, degree, the presentation text, and the coefficient
    /// descriptor text.
    pub fn key(op: &str, degree: usize, presentation_text: &str, coeff_desc: &str) -> String {
        let payload = format!("{CACHE_VERSION}\u{0}{op}\u{0}{degree}\u{0}{presentation_text}\u{0}{coeff_desc}");
        presentation_hash(&payload)
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A missing, unreadable, or stale-version entry is a miss, never an
    /// error: the cache only ever short-circuits recomputation.
    pub fn get(&self, key: &str) -> Option<Report> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        if entry.version != CACHE_VERSION {
            return None;
        }
        Some(entry.report)
    }

    pub fn put(&self, key: &str, report: &Report) -> io::Result<()> {
        let entry = Entry { version: CACHE_VERSION, report: report.clone() };
        let text = serde_json::to_string(&entry).expect("cache entries always serialize");
        let tmp = self.dir.join(format!(
            ".stage-{}-{}",
            process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.path(key))
    }
}
