//! Greyscale PGM images (plain `P2` and binary `P5`), one image per sample.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::SampleMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    /// Row-major pixel values scaled to `[0, 1]`.
    pub pixels: Vec<f64>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Option<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

pub fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<PgmImage> {
    let malformed = |reason: &str| Error::MalformedImage {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let magic = bytes.get(..2).unwrap_or(bytes);
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => {
            return Err(Error::BadMagicNumber {
                path: path.to_path_buf(),
                magic: String::from_utf8_lossy(magic).into_owned(),
            })
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number().ok_or_else(|| malformed("missing width"))? as usize;
    let height = cur.number().ok_or_else(|| malformed("missing height"))? as usize;
    let maxval = cur.number().ok_or_else(|| malformed("missing maxval"))?;
    if width == 0 || height == 0 {
        return Err(malformed("zero image size"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(malformed("maxval must be in 1..=65535"));
    }
    let count = width * height;
    let mut raw = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        cur.pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let data = bytes
            .get(cur.pos..cur.pos + need)
            .ok_or_else(|| malformed("raster is truncated"))?;
        if wide {
            raw.extend(data.chunks_exact(2).map(|c| u64::from(u16::from_be_bytes([c[0], c[1]]))));
        } else {
            raw.extend(data.iter().map(|&b| u64::from(b)));
        }
    } else {
        for _ in 0..count {
            raw.push(cur.number().ok_or_else(|| malformed("raster is truncated"))?);
        }
    }
    if raw.iter().any(|&v| v > maxval) {
        return Err(malformed("pixel value exceeds maxval"));
    }
    let scale = maxval as f64;
    Ok(PgmImage {
        width,
        height,
        maxval: maxval as u32,
        pixels: raw.into_iter().map(|v| v as f64 / scale).collect(),
    })
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<PgmImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(path, &bytes)
}

/// `*` matches any run of characters, `?` any single character.
fn wildcard_match(pattern: &[u8], name: &[u8]) -> bool {
    match (pattern.first(), name.first()) {
        (None, None) => true,
        (Some(b'*'), _) => {
            wildcard_match(&pattern[1..], name)
                || (!name.is_empty() && wildcard_match(pattern, &name[1..]))
        }
        (Some(b'?'), Some(_)) => wildcard_match(&pattern[1..], &name[1..]),
        (Some(p), Some(n)) if p == n => wildcard_match(&pattern[1..], &name[1..]),
        _ => false,
    }
}

/// Files named by a directory (every `*.pgm` inside) or by a pattern whose
/// last component may contain `*` and `?`, in lexicographic order.
pub fn resolve_sequence(dir_or_glob: &Path) -> Result<Vec<PathBuf>> {
    let (dir, pattern) = if dir_or_glob.is_dir() {
        (dir_or_glob.to_path_buf(), "*.pgm".to_string())
    } else {
        let name = dir_or_glob
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let parent = dir_or_glob
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        (parent.to_path_buf(), name)
    };
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let name = entry.file_name();
        if entry.path().is_file() && wildcard_match(pattern.as_bytes(), name.as_encoded_bytes()) {
            files.push(entry.path());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyFile {
            path: dir_or_glob.to_path_buf(),
        });
    }
    Ok(files)
}

/// Loads an image sequence, one flattened image per column.
pub fn load_pgm_sequence(dir_or_glob: impl AsRef<Path>) -> Result<SampleMatrix> {
    let files = resolve_sequence(dir_or_glob.as_ref())?;
    let mut first: Option<(usize, usize)> = None;
    let mut data = Vec::new();
    for file in &files {
        let img = load_pgm(file)?;
        let (w, h) = *first.get_or_insert((img.width, img.height));
        if (img.width, img.height) != (w, h) {
            return Err(Error::MixedDimensions {
                path: file.clone(),
                expected_width: w,
                expected_height: h,
                width: img.width,
                height: img.height,
            });
        }
        data.extend(img.pixels);
    }
    let (w, h) = first.expect("at least one file");
    SampleMatrix::from_matrix(DMatrix::from_vec(w * h, files.len(), data))
}
