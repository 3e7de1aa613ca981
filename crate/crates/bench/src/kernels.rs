//! The benchmark kernels run inside TAOs on the native backend.
//!
//! A [`Job`] is split into stages of chunks. Participants claim chunks in
//! order from one counter and a chunk of stage `s` only starts once every
//! chunk of the earlier stages is done, so any subset of the place's workers
//! can finish the job on its own.

use std::hint::black_box;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taosched_core::graph::Work;
use taosched_core::TaskType;

use crate::error::{BenchError, Result};

/// Problem sizes of the native kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct KernelSizes {
    /// Square matrix order.
    pub matmul_n: usize,
    /// Number of `u32` keys.
    pub sort_len: usize,
    /// Bytes in the source array; twice as many bytes are touched.
    pub copy_bytes: usize,
    pub synthetic_iters: u64,
}

impl Default for KernelSizes {
    fn default() -> Self {
        Self { matmul_n: 64, sort_len: 65_536, copy_bytes: 16_800_000, synthetic_iters: 200_000 }
    }
}

impl KernelSizes {
    /// Sizes small enough for tests on a single host core.
    pub fn tiny() -> Self {
        Self { matmul_n: 12, sort_len: 512, copy_bytes: 8 * 1024, synthetic_iters: 500 }
    }
}

/// What a finished job reports after verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelCheck {
    MatMul { verified: bool },
    Sort { keys: usize },
    Copy { bytes: usize },
    Synthetic,
}

fn try_vec<T: Clone>(what: &'static str, len: usize, fill: T) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|_| BenchError::Alloc { what, bytes: len * std::mem::size_of::<T>() })?;
    v.resize(len, fill);
    Ok(v)
}

fn split(len: usize, parts: usize, i: usize) -> std::ops::Range<usize> {
    let base = len / parts;
    let extra = len % parts;
    let start = i * base + i.min(extra);
    start..start + base + usize::from(i < extra)
}

fn checksum_words(words: &[u64]) -> u64 {
    words
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &w)| acc.wrapping_add(w.rotate_left((i % 64) as u32)))
}

fn key_hash(k: u32) -> u64 {
    let mut x = u64::from(k).wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Order-independent fingerprint of a key multiset.
fn multiset_hash(keys: &[u32]) -> u64 {
    keys.iter().fold(0u64, |acc, &k| acc.wrapping_add(key_hash(k)))
}

pub struct MatMul {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    /// One block of rows per chunk, each in its own allocation.
    c: Vec<Mutex<Vec<f64>>>,
    check: bool,
}

impl MatMul {
    fn new(n: usize, seed: u64, chunks: usize, check: bool) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = try_vec("matmul input", n * n, 0.0)?;
        let mut b = try_vec("matmul input", n * n, 0.0)?;
        a.iter_mut().chain(b.iter_mut()).for_each(|x| *x = rng.gen_range(-1.0..1.0));
        let c = (0..chunks)
            .map(|i| Ok(Mutex::new(try_vec("matmul output", split(n, chunks, i).len() * n, 0.0)?)))
            .collect::<Result<_>>()?;
        Ok(Self { n, a, b, c, check })
    }

    fn rows(&self, chunk: usize) {
        let n = self.n;
        let rows = split(n, self.c.len(), chunk);
        let mut out = self.c[chunk].lock().unwrap();
        for (r, i) in rows.enumerate() {
            let dst = &mut out[r * n..(r + 1) * n];
            dst.fill(0.0);
            for k in 0..n {
                let aik = self.a[i * n + k];
                let row = &self.b[k * n..(k + 1) * n];
                for (d, &bkj) in dst.iter_mut().zip(row) {
                    *d += aik * bkj;
                }
            }
        }
    }

    /// Compares against a naive `i, j, k` triple loop; each entry may differ
    /// by `1e-9` relative to the sum of the magnitudes of its terms.
    pub fn verify(&self) -> Result<()> {
        let n = self.n;
        let chunks = self.c.len();
        for chunk in 0..chunks {
            let out = self.c[chunk].lock().unwrap();
            for (r, i) in split(n, chunks, chunk).enumerate() {
                for j in 0..n {
                    let (mut sum, mut scale) = (0.0f64, 0.0f64);
                    for k in 0..n {
                        let t = self.a[i * n + k] * self.b[k * n + j];
                        sum += t;
                        scale += t.abs();
                    }
                    let got = out[r * n + j];
                    if (got - sum).abs() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
                        return Err(BenchError::Kernel(format!("matmul C[{i}][{j}] = {got}, expected {sum}")));
                    }
                }
            }
        }
        Ok(())
    }
}

pub struct Sort {
    len: usize,
    input_hash: u64,
    quarters: [Mutex<Vec<u32>>; 4],
    halves: [Mutex<Vec<u32>>; 2],
    out: Mutex<Vec<u32>>,
}

fn merge(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

impl Sort {
    fn new(len: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keys = try_vec("sort input", len, 0u32)?;
        rng.fill(&mut keys[..]);
        let input_hash = multiset_hash(&keys);
        let quarter = |i| Mutex::new(keys[split(len, 4, i)].to_vec());
        Ok(Self {
            len,
            input_hash,
            quarters: [quarter(0), quarter(1), quarter(2), quarter(3)],
            halves: [Mutex::new(Vec::new()), Mutex::new(Vec::new())],
            out: Mutex::new(Vec::new()),
        })
    }

    fn step(&self, stage: usize, chunk: usize) {
        match stage {
            0 => self.quarters[chunk].lock().unwrap().sort_unstable(),
            1 => {
                let a = self.quarters[2 * chunk].lock().unwrap();
                let b = self.quarters[2 * chunk + 1].lock().unwrap();
                let mut h = self.halves[chunk].lock().unwrap();
                h.reserve(a.len() + b.len());
                merge(&a, &b, &mut h);
            }
            _ => {
                let a = self.halves[0].lock().unwrap();
                let b = self.halves[1].lock().unwrap();
                let mut out = self.out.lock().unwrap();
                out.reserve(a.len() + b.len());
                merge(&a, &b, &mut out);
            }
        }
    }

    /// Output is sorted and holds the same keys as the input.
    pub fn verify(&self) -> Result<()> {
        let out = self.out.lock().unwrap();
        if out.len() != self.len {
            return Err(BenchError::Kernel(format!("sort produced {} of {} keys", out.len(), self.len)));
        }
        if let Some(i) = out.windows(2).position(|w| w[0] > w[1]) {
            return Err(BenchError::Kernel(format!("sort output out of order at {i}")));
        }
        if multiset_hash(&out) != self.input_hash {
            return Err(BenchError::Kernel("sort output is not a permutation of its input".into()));
        }
        Ok(())
    }

    pub fn output(&self) -> Vec<u32> {
        self.out.lock().unwrap().clone()
    }
}

pub struct Copy {
    src: Vec<u64>,
    src_checksum: u64,
    dst: Vec<Mutex<Vec<u64>>>,
    moved: AtomicUsize,
}

impl Copy {
    fn new(bytes: usize, seed: u64, chunks: usize) -> Result<Self> {
        let words = bytes.div_ceil(8);
        let mut src = try_vec("copy source", words, 0u64)?;
        ChaCha8Rng::seed_from_u64(seed).fill(&mut src[..]);
        let src_checksum = checksum_words(&src);
        let dst = (0..chunks)
            .map(|i| Ok(Mutex::new(try_vec("copy destination", split(words, chunks, i).len(), 0u64)?)))
            .collect::<Result<_>>()?;
        Ok(Self { src, src_checksum, dst, moved: AtomicUsize::new(0) })
    }

    fn step(&self, chunk: usize) {
        let range = split(self.src.len(), self.dst.len(), chunk);
        let mut d = self.dst[chunk].lock().unwrap();
        d.copy_from_slice(&self.src[range]);
        self.moved.fetch_add(d.len() * 8, Ordering::Relaxed);
    }

    /// Bytes read plus bytes written.
    pub fn traffic_bytes(&self) -> usize {
        2 * self.src.len() * 8
    }

    pub fn verify(&self) -> Result<usize> {
        let moved = self.moved.load(Ordering::Relaxed);
        if moved != self.src.len() * 8 {
            return Err(BenchError::Kernel(format!("copy moved {moved} of {} bytes", self.src.len() * 8)));
        }
        let mut joined = Vec::with_capacity(self.src.len());
        for d in &self.dst {
            joined.extend_from_slice(&d.lock().unwrap());
        }
        if checksum_words(&joined) != self.src_checksum {
            return Err(BenchError::Kernel("copy destination checksum differs from source".into()));
        }
        Ok(moved)
    }
}

pub struct Synthetic {
    iters: u64,
    sink: AtomicU64,
}

impl Synthetic {
    fn step(&self, chunks: usize, chunk: usize) {
        let range = split(self.iters as usize, chunks, chunk);
        let mut x = chunk as u64;
        for i in range {
            x = black_box(key_hash(x as u32 ^ i as u32));
        }
        self.sink.fetch_xor(x, Ordering::Relaxed);
    }
}

pub enum Body {
    MatMul(MatMul),
    Sort(Sort),
    Copy(Copy),
    Synthetic(Synthetic),
}

/// One TAO's internal work, shared by the workers of its place.
pub struct Job {
    body: Body,
    /// Cumulative chunk counts at the end of each stage.
    stage_end: Vec<usize>,
    next: AtomicUsize,
    done: AtomicUsize,
    failed: AtomicBool,
}

impl Job {
    /// Builds the input of a TAO; allocation happens here, not while timed.
    /// `check_matmul` enables the naive-oracle comparison for this instance.
    pub fn new(task_type: TaskType, work: &Work, sizes: &KernelSizes, check_matmul: bool) -> Result<Self> {
        let (body, stages) = match task_type {
            TaskType::MatMul => {
                let chunks = sizes.matmul_n.clamp(1, 8);
                (Body::MatMul(MatMul::new(sizes.matmul_n, work.seed, chunks, check_matmul)?), vec![chunks])
            }
            TaskType::Sort => (Body::Sort(Sort::new(sizes.sort_len, work.seed)?), vec![4, 2, 1]),
            TaskType::Copy => (Body::Copy(Copy::new(sizes.copy_bytes, work.seed, 16)?), vec![16]),
            TaskType::Synthetic => {
                (Body::Synthetic(Synthetic { iters: sizes.synthetic_iters, sink: AtomicU64::new(0) }), vec![4])
            }
        };
        let stage_end = stages
            .iter()
            .scan(0, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect();
        Ok(Self { body, stage_end, next: AtomicUsize::new(0), done: AtomicUsize::new(0), failed: AtomicBool::new(false) })
    }

    pub fn total_chunks(&self) -> usize {
        *self.stage_end.last().unwrap()
    }

    pub fn is_complete(&self) -> bool {
        self.done.load(Ordering::Acquire) == self.total_chunks()
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    fn run_chunk(&self, stage: usize, chunk: usize) {
        let chunks = self.stage_end[stage] - stage.checked_sub(1).map_or(0, |s| self.stage_end[s]);
        match &self.body {
            Body::MatMul(m) => m.rows(chunk),
            Body::Sort(s) => s.step(stage, chunk),
            Body::Copy(c) => c.step(chunk),
            Body::Synthetic(s) => s.step(chunks, chunk),
        }
    }

    /// Claims and runs chunks until none are left. `after_chunk` gets the
    /// time each chunk took. Returns the number of chunks this caller ran.
    pub fn work(&self, mut after_chunk: impl FnMut(Duration)) -> usize {
        let total = self.total_chunks();
        let mut ran = 0;
        loop {
            let k = self.next.fetch_add(1, Ordering::AcqRel);
            if k >= total {
                return ran;
            }
            let stage = self.stage_end.iter().position(|&e| k < e).unwrap();
            let start_of_stage = stage.checked_sub(1).map_or(0, |s| self.stage_end[s]);
            while self.done.load(Ordering::Acquire) < start_of_stage {
                std::thread::yield_now();
            }
            let t0 = Instant::now();
            if std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| self.run_chunk(stage, k - start_of_stage))).is_err() {
                self.failed.store(true, Ordering::Release);
            }
            after_chunk(t0.elapsed());
            self.done.fetch_add(1, Ordering::AcqRel);
            ran += 1;
        }
    }

    /// Output checks; call once after [`Job::is_complete`].
    pub fn verify(&self) -> Result<KernelCheck> {
        if self.failed.load(Ordering::Acquire) {
            return Err(BenchError::Kernel("a kernel chunk panicked".into()));
        }
        match &self.body {
            Body::MatMul(m) => {
                if m.check {
                    m.verify()?;
                }
                Ok(KernelCheck::MatMul { verified: m.check })
            }
            Body::Sort(s) => {
                s.verify()?;
                Ok(KernelCheck::Sort { keys: s.len })
            }
            Body::Copy(c) => Ok(KernelCheck::Copy { bytes: c.verify()? }),
            Body::Synthetic(_) => Ok(KernelCheck::Synthetic),
        }
    }
}
