//! `V2ME` feature store.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "V2ME" | version u32 (=1) | model_id: u16 len + UTF-8
//! | n_layers u16 | hidden_dim u16 | pooled_flag u8 | clip_count u32
//! | index: clip_count × (id: u16 len + UTF-8, offset u64, frames u32)
//! | payload: per clip, layers 0..=n_layers, each frames × hidden_dim f32 row-major
//! ```
//!
//! Offsets are absolute byte positions from the start of the file.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{pool_block, LayerEmbeddingSet, ModelSpec};
use crate::{Error, FeatureKind, FeatureVector, Result};

pub const MAGIC: &[u8; 4] = b"V2ME";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreIndexEntry {
    pub clip_id: String,
    pub offset: u64,
    pub frames: u32,
}

/// Read-only handle with random access by clip id.
#[derive(Debug)]
pub struct FeatureStore {
    path: PathBuf,
    model: ModelSpec,
    pooled: bool,
    index: Vec<StoreIndexEntry>,
    by_id: HashMap<String, usize>,
    file: Mutex<File>,
}

fn store_err(msg: impl Into<String>) -> Error {
    Error::Store(msg.into())
}

struct HeaderReader<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> HeaderReader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| store_err(format!("truncated header while reading {what} at byte {}", self.pos)))?;
        self.pos += N as u64;
        Ok(buf)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let mut buf = vec![0u8; len];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| store_err(format!("truncated header while reading {what} at byte {}", self.pos)))?;
        self.pos += len as u64;
        String::from_utf8(buf).map_err(|_| store_err(format!("{what} is not valid UTF-8")))
    }
}

impl FeatureStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut r = HeaderReader {
            inner: std::io::BufReader::new(file.try_clone().map_err(|e| Error::io(path, e))?),
            pos: 0,
        };

        let magic = r.bytes::<4>("magic")?;
        if &magic != MAGIC {
            return Err(store_err(format!("bad magic {magic:?}, expected \"V2ME\"")));
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(store_err(format!("unsupported version {version}, expected {VERSION}")));
        }
        let model_id = r.string("model_id")?;
        let n_layers = r.u16("n_layers")? as usize;
        let hidden_dim = r.u16("hidden_dim")? as usize;
        let pooled = match r.u8("pooled_flag")? {
            0 => false,
            1 => true,
            other => return Err(store_err(format!("invalid pooled_flag {other}"))),
        };
        let model = ModelSpec {
            model_id,
            n_layers,
            hidden_dim,
        };
        model.validate()?;
        let clip_count = r.u32("clip_count")? as usize;

        let mut index = Vec::with_capacity(clip_count);
        let mut by_id = HashMap::with_capacity(clip_count);
        for i in 0..clip_count {
            let clip_id = r.string(&format!("index entry {i}"))?;
            let offset = r.u64(&format!("offset of {clip_id}"))?;
            let frames = r.u32(&format!("frames of {clip_id}"))?;
            if by_id.insert(clip_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(clip_id));
            }
            if pooled && frames != 1 {
                return Err(store_err(format!("clip {clip_id}: pooled store with {frames} frames")));
            }
            index.push(StoreIndexEntry {
                clip_id,
                offset,
                frames,
            });
        }
        let header_end = r.pos;

        let store = FeatureStore {
            path: path.to_path_buf(),
            model,
            pooled,
            index,
            by_id,
            file: Mutex::new(file),
        };
        for e in &store.index {
            let end = e.offset.checked_add(store.block_bytes(e.frames));
            if e.offset < header_end || end.is_none_or(|end| end > file_len) {
                return Err(Error::TruncatedBlock {
                    clip: e.clip_id.clone(),
                });
            }
        }
        Ok(store)
    }

    fn block_bytes(&self, frames: u32) -> u64 {
        self.model.vector_count() as u64 * frames as u64 * self.model.hidden_dim as u64 * 4
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn is_pooled(&self) -> bool {
        self.pooled
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn index(&self) -> &[StoreIndexEntry] {
        &self.index
    }

    pub fn clip_ids(&self) -> impl Iterator<Item = &str> {
        self.index.iter().map(|e| e.clip_id.as_str())
    }

    pub fn contains(&self, clip_id: &str) -> bool {
        self.by_id.contains_key(clip_id)
    }

    fn read_block(&self, entry: &StoreIndexEntry) -> Result<Vec<f32>> {
        let bytes = self.block_bytes(entry.frames) as usize;
        let mut buf = vec![0u8; bytes];
        {
            let mut f = self.file.lock().expect("store file lock poisoned");
            f.seek(SeekFrom::Start(entry.offset))
                .and_then(|_| f.read_exact(&mut buf))
                .map_err(|_| Error::TruncatedBlock {
                    clip: entry.clip_id.clone(),
                })?;
        }
        Ok(buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    /// Loads every layer of one clip.
    pub fn get(&self, clip_id: &str) -> Result<LayerEmbeddingSet> {
        let &i = self
            .by_id
            .get(clip_id)
            .ok_or_else(|| Error::MissingFeatures(vec![clip_id.to_string()]))?;
        self.load(&self.index[i])
    }

    fn load(&self, entry: &StoreIndexEntry) -> Result<LayerEmbeddingSet> {
        let data = self.read_block(entry)?;
        let per_layer = entry.frames as usize * self.model.hidden_dim;
        let layers = if per_layer == 0 {
            vec![Vec::new(); self.model.vector_count()]
        } else {
            data.chunks_exact(per_layer).map(<[f32]>::to_vec).collect()
        };
        LayerEmbeddingSet::new(
            entry.clip_id.clone(),
            self.model.clone(),
            entry.frames as usize,
            self.pooled,
            layers,
        )
    }

    /// All clips in file order.
    pub fn iter(&self) -> impl Iterator<Item = Result<LayerEmbeddingSet>> + '_ {
        self.index.iter().map(move |e| self.load(e))
    }

    /// Mean-pooled vectors of one layer for every clip, in file order.
    ///
    /// Reads only the bytes of the requested layer.
    pub fn pooled_layer(&self, layer: usize) -> Result<Vec<(String, FeatureVector)>> {
        if layer > self.model.n_layers {
            return Err(Error::MissingLayer {
                layer,
                max: self.model.n_layers,
            });
        }
        let dim = self.model.hidden_dim;
        let mut out = Vec::with_capacity(self.index.len());
        let mut f = self.file.lock().expect("store file lock poisoned");
        for e in &self.index {
            let layer_bytes = e.frames as u64 * dim as u64 * 4;
            let mut buf = vec![0u8; layer_bytes as usize];
            f.seek(SeekFrom::Start(e.offset + layer as u64 * layer_bytes))
                .and_then(|_| f.read_exact(&mut buf))
                .map_err(|_| Error::TruncatedBlock {
                    clip: e.clip_id.clone(),
                })?;
            let block: Vec<f32> = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if !block.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("clip {} layer {layer}", e.clip_id)));
            }
            let values = pool_block(&block, e.frames as usize, dim)?;
            let kind = baseline_kind(&self.model.model_id).unwrap_or(FeatureKind::Embedding);
            let (model_id, layer_tag) = match kind {
                FeatureKind::Embedding => (Some(self.model.model_id.clone()), Some(layer)),
                _ => (None, None),
            };
            out.push((e.clip_id.clone(), FeatureVector::new(kind, model_id, layer_tag, values)?));
        }
        Ok(out)
    }
}

/// Stores holding baseline features use the feature kind as model id.
fn baseline_kind(model_id: &str) -> Option<FeatureKind> {
    model_id
        .parse::<FeatureKind>()
        .ok()
        .filter(|k| k.baseline_dim().is_some())
}

/// Writes `sets` (all sharing one model and pooled flag) to `path`.
pub fn write_store(path: impl AsRef<Path>, sets: &[LayerEmbeddingSet]) -> Result<()> {
    let path = path.as_ref();
    let first = sets
        .first()
        .ok_or_else(|| store_err("cannot write an empty store (model unknown)"))?;
    let model = first.model().clone();
    let pooled = first.is_pooled();
    model.validate()?;
    let too_big = |what: &str| store_err(format!("{what} does not fit the header field"));
    let n_layers = u16::try_from(model.n_layers).map_err(|_| too_big("n_layers"))?;
    let hidden_dim = u16::try_from(model.hidden_dim).map_err(|_| too_big("hidden_dim"))?;
    let model_id_len = u16::try_from(model.model_id.len()).map_err(|_| too_big("model_id"))?;
    let clip_count = u32::try_from(sets.len()).map_err(|_| too_big("clip_count"))?;

    let mut seen = std::collections::HashSet::new();
    let mut header_len = 4 + 4 + 2 + model.model_id.len() as u64 + 2 + 2 + 1 + 4;
    for s in sets {
        if s.model() != &model || s.is_pooled() != pooled {
            return Err(store_err(format!(
                "clip {} differs in model or pooled flag from the first clip",
                s.clip_id()
            )));
        }
        if !seen.insert(s.clip_id()) {
            return Err(Error::DuplicateId(s.clip_id().to_string()));
        }
        u16::try_from(s.clip_id().len()).map_err(|_| too_big("clip id"))?;
        u32::try_from(s.frames()).map_err(|_| too_big("frames"))?;
        header_len += 2 + s.clip_id().len() as u64 + 8 + 4;
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path, e);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&model_id_len.to_le_bytes()).map_err(io)?;
    w.write_all(model.model_id.as_bytes()).map_err(io)?;
    w.write_all(&n_layers.to_le_bytes()).map_err(io)?;
    w.write_all(&hidden_dim.to_le_bytes()).map_err(io)?;
    w.write_all(&[u8::from(pooled)]).map_err(io)?;
    w.write_all(&clip_count.to_le_bytes()).map_err(io)?;

    let mut offset = header_len;
    for s in sets {
        w.write_all(&(s.clip_id().len() as u16).to_le_bytes()).map_err(io)?;
        w.write_all(s.clip_id().as_bytes()).map_err(io)?;
        w.write_all(&offset.to_le_bytes()).map_err(io)?;
        w.write_all(&(s.frames() as u32).to_le_bytes()).map_err(io)?;
        offset += (model.vector_count() * s.frames() * model.hidden_dim * 4) as u64;
    }
    for s in sets {
        for layer in s.layers() {
            for v in layer {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}
