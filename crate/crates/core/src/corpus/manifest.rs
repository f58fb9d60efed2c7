//! Tab-separated manifest files.
//!
//! ```text
//! id<TAB>path<TAB>dialect[<TAB>duration_s]
//! ```
//!
//! Relative audio paths resolve against the manifest's directory. When the
//! optional `duration_s` column is absent the duration is read from the WAV
//! header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{wav_duration_s, CorpusManifest, Dialect, UtteranceRecord};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let manifest_err = |msg: &str| Error::Manifest {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    let (_, header) = lines.next().ok_or_else(|| manifest_err("no records"))?;
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    let has_duration = match cols.as_slice() {
        ["id", "path", "dialect"] => false,
        ["id", "path", "dialect", "duration_s"] => true,
        _ => return Err(manifest_err("header must be `id<TAB>path<TAB>dialect`")),
    };

    let mut records = Vec::new();
    for (lineno, line) in lines {
        let row = lineno + 1;
        let row_err = |msg: String| Error::ManifestRow {
            path: path.to_path_buf(),
            row,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let expected = if has_duration { 4 } else { 3 };
        if fields.len() != expected {
            return Err(row_err(format!("expected {expected} fields, found {}", fields.len())));
        }
        if fields[0].is_empty() {
            return Err(row_err("empty id".into()));
        }
        let dialect: Dialect = fields[2]
            .parse()
            .map_err(|_| row_err(format!("unknown dialect `{}`", fields[2])))?;
        let audio_path = resolve(base, fields[1]);
        let duration_s = if has_duration {
            let d: f64 = fields[3]
                .parse()
                .map_err(|_| row_err(format!("bad duration `{}`", fields[3])))?;
            if !(d > 0.0) {
                return Err(row_err("duration must be > 0".into()));
            }
            d
        } else {
            wav_duration_s(&audio_path).map_err(|e| row_err(e.to_string()))?
        };
        records.push(UtteranceRecord {
            id: fields[0].to_string(),
            audio_path,
            dialect,
            duration_s,
        });
    }
    if records.is_empty() {
        return Err(manifest_err("no records"));
    }
    CorpusManifest::new(records).map_err(|e| manifest_err(&e.to_string()))
}

/// Writes the four-column form; paths under the manifest's directory are
/// written relative to it.
pub fn write_manifest(manifest: &CorpusManifest, path: &Path) -> Result<()> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut out = String::from("id\tpath\tdialect\tduration_s\n");
    for r in manifest.records() {
        let p = r.audio_path.strip_prefix(base).unwrap_or(&r.audio_path);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.id,
            p.display(),
            r.dialect,
            r.duration_s
        );
    }
    write_atomic(path, out.as_bytes())
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{write_wav_pcm16, Waveform};

    fn tone(n: usize) -> Waveform {
        Waveform::new((0..n).map(|i| (i as f64 * 0.01).sin() * 0.3).collect(), 16_000).unwrap()
    }

    #[test]
    fn two_row_manifest_reads_durations_from_wav() {
        let dir = tempfile::tempdir().unwrap();
        write_wav_pcm16(&dir.path().join("a.wav"), &tone(16_000)).unwrap();
        write_wav_pcm16(&dir.path().join("b.wav"), &tone(8_000)).unwrap();
        let mp = dir.path().join("m.tsv");
        fs::write(&mp, "id\tpath\tdialect\nu1\ta.wav\tLT\nu2\tb.wav\tCT\n").unwrap();
        let m = load_manifest(&mp).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.count(Dialect::Lt), 1);
        assert_eq!(m.count(Dialect::Ct), 1);
        assert_eq!(m.total_duration(Dialect::Lt), 1.0);
        assert_eq!(m.total_duration(Dialect::Ct), 0.5);
        assert_eq!(m.records()[1].audio_path, dir.path().join("b.wav"));
    }

    #[test]
    fn empty_file_has_no_records() {
        let dir = tempfile::tempdir().unwrap();
        let mp = dir.path().join("m.tsv");
        fs::write(&mp, "").unwrap();
        let err = load_manifest(&mp).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
        fs::write(&mp, "id\tpath\tdialect\n").unwrap();
        assert!(load_manifest(&mp).unwrap_err().to_string().contains("no records"));
    }

    #[test]
    fn unknown_dialect_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let mp = dir.path().join("m.tsv");
        fs::write(&mp, "id\tpath\tdialect\tduration_s\nu1\ta.wav\tLT\t1.0\nu2\tb.wav\tXX\t2.0\n").unwrap();
        match load_manifest(&mp).unwrap_err() {
            Error::ManifestRow { row, msg, .. } => {
                assert_eq!(row, 3);
                assert!(msg.contains("XX"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_file_and_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_manifest(&dir.path().join("nope.tsv")),
            Err(Error::Io { .. })
        ));
        let mp = dir.path().join("m.tsv");
        fs::write(&mp, "id\tpath\tdialect\nu1\ta.wav\n").unwrap();
        assert!(matches!(load_manifest(&mp), Err(Error::ManifestRow { row: 2, .. })));
        fs::write(&mp, "id\tpath\tdialect\nu1\tmissing.wav\tLT\n").unwrap();
        assert!(matches!(load_manifest(&mp), Err(Error::ManifestRow { row: 2, .. })));
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![
            UtteranceRecord {
                id: "x".into(),
                audio_path: dir.path().join("x.wav"),
                dialect: Dialect::Ct,
                duration_s: 1.25,
            },
            UtteranceRecord {
                id: "y".into(),
                audio_path: dir.path().join("y.wav"),
                dialect: Dialect::Lt,
                duration_s: 2.5,
            },
        ];
        let m = CorpusManifest::new(recs).unwrap();
        let mp = dir.path().join("m.tsv");
        write_manifest(&m, &mp).unwrap();
        let text = fs::read_to_string(&mp).unwrap();
        assert!(text.contains("x\tx.wav\tCT\t1.25"));
        assert_eq!(load_manifest(&mp).unwrap(), m);
    }
}
