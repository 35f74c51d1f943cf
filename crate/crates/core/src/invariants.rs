//! Gromov-Witten numbers and Welschinger invariants as sums of
//! multiplicities over marked floor diagrams, with a persistent cache.
//!
//! For each floor diagram the marking search visits one marking per orbit
//! of the automorphisms that fix every floor. The remaining automorphisms
//! permute floors and act freely on those orbits, so the sum over
//! equivalence classes is the sum over visited markings divided by the
//! number of floor automorphisms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::canon::floor_automorphism_count;
use crate::diagram::FloorDiagram;
use crate::enumerate::{enumerate_floor_diagrams_with, EnumOptions};
use crate::error::{FloorError, Result};
use crate::marking::{
    build_constraints, dimension_condition, ConstraintSpec, MarkingSearch, SearchMode,
};
use crate::multiplicity::{Evaluator, InvariantOracle, LowerMemo};

const CACHE_HEADER: &str = "floorcount-cache v1";
const CHECKSUM_PREFIX: &str = "checksum sha256:";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InvariantKey {
    GromovWitten { n: u32, d: u32, g: u32, l: Vec<u32> },
    Welschinger { n: u32, d: u32 },
}

impl fmt::Display for InvariantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantKey::GromovWitten { n, d, g, l } => {
                let l: Vec<String> = l.iter().map(u32::to_string).collect();
                write!(f, "gw:n={n}:d={d}:g={g}:l={}", l.join(","))
            }
            InvariantKey::Welschinger { n, d } => write!(f, "w:n={n}:d={d}"),
        }
    }
}

impl FromStr for InvariantKey {
    type Err = FloorError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || FloorError::CacheFormat(format!("bad key {s:?}"));
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let mut field = |name: &str| -> Result<&str> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(name))
                .and_then(|p| p.strip_prefix('='))
                .ok_or_else(bad)
        };
        let num = |v: &str| v.parse::<u32>().map_err(|_| bad());
        let key = match kind {
            "gw" => {
                let n = num(field("n")?)?;
                let d = num(field("d")?)?;
                let g = num(field("g")?)?;
                let l = field("l")?
                    .split(',')
                    .map(num)
                    .collect::<Result<Vec<u32>>>()?;
                InvariantKey::GromovWitten { n, d, g, l }
            }
            "w" => {
                let n = num(field("n")?)?;
                let d = num(field("d")?)?;
                InvariantKey::Welschinger { n, d }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() || key.to_string() != s {
            return Err(bad());
        }
        Ok(key)
    }
}

/// Thread-safe memo of computed invariants. Entries are never overwritten.
#[derive(Debug, Default)]
pub struct InvariantCache {
    entries: RwLock<BTreeMap<String, BigInt>>,
}

impl InvariantCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &InvariantKey) -> Option<BigInt> {
        self.entries.read().unwrap().get(&key.to_string()).cloned()
    }

    /// Inserts `value` unless the key is present. A present entry with a
    /// different value is reported as a contract violation.
    pub fn insert(&self, key: &InvariantKey, value: BigInt) -> Result<()> {
        let mut map = self.entries.write().unwrap();
        let k = key.to_string();
        match map.get(&k) {
            Some(old) if *old != value => Err(FloorError::ContractViolation(format!(
                "cache entry {k} is {old}, refusing to overwrite with {value}"
            ))),
            Some(_) => Ok(()),
            None => {
                map.insert(k, value);
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of all entries keyed by serialized key.
    pub fn entries(&self) -> BTreeMap<String, BigInt> {
        self.entries.read().unwrap().clone()
    }

    pub fn to_text(&self) -> String {
        let mut body = format!("{CACHE_HEADER}\n");
        for (k, v) in self.entries.read().unwrap().iter() {
            body.push_str(&format!("{k} {v}\n"));
        }
        let digest = Sha256::digest(body.as_bytes());
        body.push_str(CHECKSUM_PREFIX);
        for b in digest {
            body.push_str(&format!("{b:02x}"));
        }
        body.push('\n');
        body
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let body_end = text
            .trim_end_matches('\n')
            .rfind('\n')
            .map(|i| i + 1)
            .ok_or(FloorError::ChecksumMismatch)?;
        let (body, trailer) = text.split_at(body_end);
        let expected = trailer
            .trim_end_matches('\n')
            .strip_prefix(CHECKSUM_PREFIX)
            .ok_or(FloorError::ChecksumMismatch)?;
        let actual: String = Sha256::digest(body.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        if actual != expected {
            return Err(FloorError::ChecksumMismatch);
        }
        let mut lines = body.lines();
        if lines.next() != Some(CACHE_HEADER) {
            return Err(FloorError::CacheFormat("missing or unknown header".into()));
        }
        let cache = InvariantCache::new();
        for line in lines {
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| FloorError::CacheFormat(format!("bad line {line:?}")))?;
            let key: InvariantKey = k.parse()?;
            let value: BigInt = v
                .parse()
                .map_err(|_| FloorError::CacheFormat(format!("bad value {v:?}")))?;
            cache.insert(&key, value)?;
        }
        Ok(cache)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Loads `path`, or returns an empty cache if it does not exist.
    pub fn load_or_default(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::new())
        }
    }

    /// Writes through a temporary file in the same directory and renames it
    /// into place.
    pub fn store(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = std::path::PathBuf::from(tmp);
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_text().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// Diagram lists by (degree, genus).
type DiagramStore = Mutex<HashMap<(u32, u32), Arc<Vec<FloorDiagram>>>>;

/// Computes invariants, memoizing every value it produces (including the
/// lower-dimensional ones used by the recursion) in its cache.
pub struct Engine {
    cache: InvariantCache,
    pool: Option<rayon::ThreadPool>,
    options: EnumOptions,
    diagrams: DiagramStore,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine {
    /// Engine on the global rayon pool with an empty cache.
    pub fn new() -> Self {
        Engine {
            cache: InvariantCache::new(),
            pool: None,
            options: EnumOptions::default(),
            diagrams: Mutex::new(HashMap::new()),
        }
    }

    /// Runs all parallel work on a dedicated pool of `jobs` threads.
    pub fn with_jobs(mut self, jobs: usize) -> Result<Self> {
        if jobs == 0 {
            return Err(FloorError::InvalidArgument("jobs must be positive".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| FloorError::InvalidArgument(e.to_string()))?;
        self.pool = Some(pool);
        Ok(self)
    }

    pub fn with_cache(mut self, cache: InvariantCache) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_options(mut self, options: EnumOptions) -> Self {
        self.options = options;
        self
    }

    pub fn cache(&self) -> &InvariantCache {
        &self.cache
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Floor diagrams of degree `d` and genus `g`, memoized.
    pub fn diagrams(&self, d: u32, g: u32) -> Result<Arc<Vec<FloorDiagram>>> {
        if let Some(ds) = self.diagrams.lock().unwrap().get(&(d, g)) {
            return Ok(ds.clone());
        }
        let ds = Arc::new(self.install(|| enumerate_floor_diagrams_with(d, g, self.options))?);
        self.diagrams
            .lock()
            .unwrap()
            .entry((d, g))
            .or_insert(ds.clone());
        Ok(ds)
    }

    /// `N^(n)_{d,g}(l)`: the number of degree-`d` genus-`g` curves in
    /// projective `n`-space through `l[j]` generic `j`-dimensional linear
    /// spaces. Supported for `n = 2` in any genus and for `n >= 3` in
    /// genus 0.
    pub fn gromov_witten(&self, n: u32, d: u32, g: u32, l: &[u32]) -> Result<BigUint> {
        if n < 2 {
            return Err(FloorError::UnsupportedDimension(n));
        }
        if n > 2 && g > 0 {
            return Err(FloorError::UnsupportedGenus { n, g });
        }
        if d == 0 {
            return Err(FloorError::InvalidArgument(
                "degree must be at least 1".into(),
            ));
        }
        dimension_condition(n, d, g, l)?;
        let key = InvariantKey::GromovWitten {
            n,
            d,
            g,
            l: l.to_vec(),
        };
        if let Some(v) = self.cache.get(&key) {
            return to_unsigned(v);
        }
        if g == 0 && n <= 3 && welschinger_constraints(n, d)? == l {
            // The real sum costs little on top of the complex one.
            self.welschinger(n, d)?;
            if let Some(v) = self.cache.get(&key) {
                return to_unsigned(v);
            }
        }
        let spec = build_constraints(n, d, g, l)?;
        let (complex, _) = self.sum_over_diagrams(&spec, false)?;
        self.cache.insert(&key, BigInt::from(complex.clone()))?;
        Ok(complex)
    }

    /// `W^(n)_d` for `n` in `{2, 3}`, with respect to `l_0` real points
    /// where `l_0` is fixed by the dimension condition.
    pub fn welschinger(&self, n: u32, d: u32) -> Result<BigInt> {
        if n != 2 && n != 3 {
            return Err(FloorError::UnsupportedDimension(n));
        }
        if d == 0 {
            return Err(FloorError::InvalidArgument(
                "degree must be at least 1".into(),
            ));
        }
        let key = InvariantKey::Welschinger { n, d };
        if let Some(v) = self.cache.get(&key) {
            return Ok(v);
        }
        let l = welschinger_constraints(n, d)?;
        let spec = build_constraints(n, d, 0, &l)?;
        let (complex, real) = self.sum_over_diagrams(&spec, true)?;
        let gw_key = InvariantKey::GromovWitten { n, d, g: 0, l };
        self.cache.insert(&gw_key, BigInt::from(complex))?;
        let value = welschinger_sign(n, d) * real;
        self.cache.insert(&key, value.clone())?;
        Ok(value)
    }

    /// Sums complex (and, if asked, real) multiplicities over equivalence
    /// classes of marked diagrams of every floor diagram matching `spec`.
    ///
    /// The parallel pass only reads lower-dimensional values from the cache.
    /// Diagrams that hit a missing value are set aside; the missing values
    /// are then computed one at a time and those diagrams are summed again.
    fn sum_over_diagrams(&self, spec: &ConstraintSpec, real: bool) -> Result<(BigUint, BigInt)> {
        let diagrams = self.diagrams(spec.degree(), spec.genus())?;
        let mut complex = BigUint::zero();
        let mut real_sum = BigInt::zero();
        let mut pending: Vec<usize> = (0..diagrams.len()).collect();
        while !pending.is_empty() {
            let parts: Vec<Result<Partial>> = self.install(|| {
                pending
                    .par_iter()
                    .map(|&i| self.diagram_sum(&diagrams[i], spec, real))
                    .collect()
            });
            let mut missing = BTreeSet::new();
            let mut retry = Vec::new();
            for (&i, p) in pending.iter().zip(parts) {
                match p? {
                    Partial::Done(c, r) => {
                        complex += c;
                        real_sum += r;
                    }
                    Partial::Missing(keys) => {
                        missing.extend(keys);
                        retry.push(i);
                    }
                }
            }
            for key in missing {
                match key {
                    InvariantKey::GromovWitten { n, d, g, l } => {
                        self.gromov_witten(n, d, g, &l)?;
                    }
                    InvariantKey::Welschinger { n, d } => {
                        self.welschinger(n, d)?;
                    }
                }
            }
            pending = retry;
        }
        Ok((complex, real_sum))
    }

    fn diagram_sum(&self, d: &FloorDiagram, spec: &ConstraintSpec, real: bool) -> Result<Partial> {
        let search = MarkingSearch::new(d, spec, SearchMode::Viable)?;
        let eval = Evaluator::new(d, spec)?;
        let lower = CacheReader {
            cache: &self.cache,
            missing: Mutex::new(BTreeSet::new()),
        };
        let mut complex = BigUint::zero();
        let mut real_sum = BigInt::zero();
        let mut memo = LowerMemo::default();
        let mut failure = None;
        search.run(&mut |s| {
            if failure.is_some() {
                return;
            }
            match eval.evaluate(&s.floor_marks, &s.edge_marks, &lower, real, &mut memo) {
                Ok(r) => {
                    complex += r.mu_complex;
                    if let Some(x) = r.mu_real {
                        real_sum += x;
                    }
                }
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let missing = lower.missing.into_inner().unwrap();
        if !missing.is_empty() {
            return Ok(Partial::Missing(missing));
        }
        let k = floor_automorphism_count(d);
        let (kc, kr) = (BigUint::from(k), BigInt::from(k));
        if !(&complex % &kc).is_zero() || !(&real_sum % &kr).is_zero() {
            return Err(FloorError::ContractViolation(format!(
                "multiplicity sum of {d} is not divisible by its {k} floor automorphisms"
            )));
        }
        Ok(Partial::Done(complex / kc, real_sum / kr))
    }
}

enum Partial {
    Done(BigUint, BigInt),
    Missing(BTreeSet<InvariantKey>),
}

/// Lower-dimensional oracle that answers from the cache only. Misses are
/// recorded and answered with zero; the caller discards the result.
struct CacheReader<'a> {
    cache: &'a InvariantCache,
    missing: Mutex<BTreeSet<InvariantKey>>,
}

impl CacheReader<'_> {
    fn lookup(&self, key: InvariantKey) -> Option<BigInt> {
        let v = self.cache.get(&key);
        if v.is_none() {
            self.missing.lock().unwrap().insert(key);
        }
        v
    }
}

impl InvariantOracle for CacheReader<'_> {
    fn rational_gw(&self, n: u32, d: u32, l: &[u32]) -> Result<BigUint> {
        match self.lookup(InvariantKey::GromovWitten {
            n,
            d,
            g: 0,
            l: l.to_vec(),
        }) {
            Some(v) => to_unsigned(v),
            None => Ok(BigUint::zero()),
        }
    }

    fn welschinger(&self, n: u32, d: u32) -> Result<BigInt> {
        Ok(self
            .lookup(InvariantKey::Welschinger { n, d })
            .unwrap_or_default())
    }
}

impl InvariantOracle for Engine {
    fn rational_gw(&self, n: u32, d: u32, l: &[u32]) -> Result<BigUint> {
        if dimension_condition(n, d, 0, l).is_err() {
            return Ok(BigUint::zero());
        }
        self.gromov_witten(n, d, 0, l)
    }

    fn welschinger(&self, n: u32, d: u32) -> Result<BigInt> {
        Engine::welschinger(self, n, d)
    }
}

/// `(-1)^{n(d-1)(d-2)/2}`.
pub fn welschinger_sign(n: u32, d: u32) -> i32 {
    let e = u64::from(n) * u64::from(d - 1) * u64::from(d.saturating_sub(2)) / 2;
    if e % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Point counts `(l_0, 0, ..., 0)` for real rational curves, with `l_0`
/// solving the dimension condition.
pub fn welschinger_constraints(n: u32, d: u32) -> Result<Vec<u32>> {
    let num = (n + 1) * d + n - 3;
    if !num.is_multiple_of(n - 1) {
        return Err(FloorError::ContractViolation(format!(
            "no integral number of points for degree {d} in dimension {n}"
        )));
    }
    let mut l = vec![0; (n - 1) as usize];
    l[0] = num / (n - 1);
    Ok(l)
}

fn to_unsigned(v: BigInt) -> Result<BigUint> {
    if v.is_negative() {
        return Err(FloorError::CacheFormat(format!(
            "negative Gromov-Witten number {v}"
        )));
    }
    let (sign, mag) = v.into_parts();
    debug_assert!(sign != Sign::Minus);
    Ok(mag)
}
