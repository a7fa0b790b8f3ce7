use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

pub(crate) struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Stage every file as a hidden temporary in `dir`, then rename them into
/// place. Nothing is renamed unless every file was staged.
pub(crate) fn commit(dir: &Path, files: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(files.len());
    for f in files {
        let tmp = dir.join(format!(".{}.tmp", f.name));
        if let Err(e) = fs::write(&tmp, &f.bytes) {
            let _ = fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(io(&tmp, e));
        }
        staged.push((tmp, dir.join(&f.name)));
    }
    let mut done = Vec::with_capacity(staged.len());
    for (i, (tmp, fin)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, fin) {
            for (t, _) in &staged[i..] {
                let _ = fs::remove_file(t);
            }
            return Err(io(fin, e));
        }
        done.push(fin.clone());
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commits_all_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![
            Artifact {
                name: "a.csv".into(),
                bytes: b"1".to_vec(),
            },
            Artifact {
                name: "b.csv".into(),
                bytes: b"2".to_vec(),
            },
        ];
        let out = commit(dir.path(), &files).unwrap();
        assert_eq!(out.len(), 2);
        let mut names: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, vec!["a.csv", "b.csv"]);
    }

    #[test]
    fn failed_staging_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![
            Artifact {
                name: "a.csv".into(),
                bytes: b"1".to_vec(),
            },
            Artifact {
                name: "missing/b.csv".into(),
                bytes: b"2".to_vec(),
            },
        ];
        assert!(commit(dir.path(), &files).is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
