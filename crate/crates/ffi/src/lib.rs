//! C ABI over `puf-spectra`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` / `*_build`
//! functions and released by the matching `*_free`. Every fallible call returns
//! a [`PsStatus`]; on failure a message is available from
//! [`ps_last_error_message`] on the same thread. Strings returned through out
//! parameters are owned by the caller and released with [`ps_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use puf_spectra::boolean::theory;
use puf_spectra::crp::read_crp;
use puf_spectra::sim::{collect_responses, generate_population, ChallengeSet, DapufInstance, DapufParams, FaultSpec, ResponseTable};
use puf_spectra::spectra::{build_spectrum, CorrelationSpectrum, PairMode};
use puf_spectra::stats::{calibrated_kl0, compare_spectra, SpectrumComparisonReport, Thresholds, Verdict};
use puf_spectra::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Incomparable = 3,
    Domain = 4,
    Config = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul removed")));
}

fn fail(status: PsStatus, msg: impl Into<String>) -> PsStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> PsStatus {
    let status = match e {
        Error::Incomparable(_) => PsStatus::Incomparable,
        Error::Domain(_) => PsStatus::Domain,
        Error::Config(_) => PsStatus::Config,
        Error::Parse { .. } => PsStatus::Parse,
        Error::Io { .. } => PsStatus::Io,
    };
    fail(status, e.to_string())
}

/// Runs `f`, mapping panics to [`PsStatus::Panic`].
fn guard(f: impl FnOnce() -> PsStatus) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PsStatus::Panic, "internal panic"),
    }
}

macro_rules! deref {
    ($p:expr, $name:literal) => {
        match unsafe { $p.as_ref() } {
            Some(r) => r,
            None => return fail(PsStatus::NullPointer, concat!($name, " is null")),
        }
    };
}

macro_rules! out {
    ($p:expr, $name:literal) => {
        match unsafe { $p.as_mut() } {
            Some(r) => r,
            None => return fail(PsStatus::NullPointer, concat!($name, " is null")),
        }
    };
}

macro_rules! try_ps {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, PsStatus> {
    if p.is_null() {
        return Err(fail(PsStatus::NullPointer, format!("{name} is null")));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(PsStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn give_string(s: String, out: &mut *mut c_char) -> PsStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            PsStatus::Ok
        }
        Err(_) => fail(PsStatus::InvalidArgument, "string contains NUL"),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Coefficient `1 - i / 2^(m-1)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_coeff_from_mismatches(i: u64, m: u32, out: *mut f64) -> PsStatus {
    guard(|| {
        let out = out!(out, "out");
        *out = try_ps!(theory::coeff_from_mismatches(i, m));
        PsStatus::Ok
    })
}

/// Probability of lattice coefficient `coeff` for a uniformly random ordered pair of m-variable functions.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_bucket_probability(coeff: f64, m: u32, out: *mut f64) -> PsStatus {
    guard(|| {
        let out = out!(out, "out");
        *out = try_ps!(theory::bucket_probability(coeff, m));
        PsStatus::Ok
    })
}

/// Exact ordered-pair count at `coeff`, as a decimal string (free with [`ps_string_free`]).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_pair_count(coeff: f64, m: u32, out: *mut *mut c_char) -> PsStatus {
    guard(|| {
        let out = out!(out, "out");
        let n = try_ps!(theory::pair_count(coeff, m));
        give_string(n.to_string(), out)
    })
}

/// Simulation parameters; start from [`ps_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsParams {
    pub n_stages: u32,
    pub delay_mean: f64,
    pub delay_sigma: f64,
    pub layout_sigma: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl From<PsParams> for DapufParams {
    fn from(p: PsParams) -> Self {
        DapufParams {
            n_stages: p.n_stages as usize,
            delay_mean: p.delay_mean,
            delay_sigma: p.delay_sigma,
            layout_sigma: p.layout_sigma,
            noise_sigma: p.noise_sigma,
            seed: p.seed,
            ..DapufParams::default()
        }
    }
}

#[no_mangle]
pub extern "C" fn ps_params_default() -> PsParams {
    let d = DapufParams::default();
    PsParams {
        n_stages: d.n_stages as u32,
        delay_mean: d.delay_mean,
        delay_sigma: d.delay_sigma,
        layout_sigma: d.layout_sigma,
        noise_sigma: d.noise_sigma,
        seed: d.seed,
    }
}

/// Opaque population of simulated PUF instances.
pub struct PsPopulation {
    instances: Vec<DapufInstance>,
}

/// Opaque majority-voted response table.
pub struct PsResponses {
    table: ResponseTable,
}

/// Opaque correlation spectrum of one response bit.
pub struct PsSpectrum {
    spectrum: CorrelationSpectrum,
}

/// Draws `count` instances.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ps_population_new(params: *const PsParams, count: usize, out: *mut *mut PsPopulation) -> PsStatus {
    guard(|| {
        let params = deref!(params, "params");
        let out = out!(out, "out");
        let instances = try_ps!(generate_population(&(*params).into(), count));
        *out = Box::into_raw(Box::new(PsPopulation { instances }));
        PsStatus::Ok
    })
}

/// Copy of `pop` with a fault applied to every instance. `spec` uses the CLI form, e.g. `10:all:1`.
///
/// # Safety
/// `pop` must be a live handle, `spec` a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_population_inject_fault(
    pop: *const PsPopulation,
    spec: *const c_char,
    out: *mut *mut PsPopulation,
) -> PsStatus {
    guard(|| {
        let pop = deref!(pop, "pop");
        let out = out!(out, "out");
        let spec = match c_str(spec, "spec") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let fault: FaultSpec = try_ps!(spec.parse());
        let instances = try_ps!(pop
            .instances
            .iter()
            .map(|i| i.inject_fault(&fault))
            .collect::<Result<Vec<_>, _>>());
        *out = Box::into_raw(Box::new(PsPopulation { instances }));
        PsStatus::Ok
    })
}

/// Returns 0 for a null handle.
///
/// # Safety
/// `pop` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_population_len(pop: *const PsPopulation) -> usize {
    unsafe { pop.as_ref() }.map_or(0, |p| p.instances.len())
}

/// # Safety
/// `pop` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_population_free(pop: *mut PsPopulation) {
    if !pop.is_null() {
        drop(unsafe { Box::from_raw(pop) });
    }
}

/// Evaluates `pop` on `n_challenges` random challenges drawn from `challenge_seed`, with `k`-fold majority voting.
///
/// # Safety
/// `pop` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_collect(
    pop: *const PsPopulation,
    n_challenges: usize,
    challenge_seed: u64,
    k: usize,
    out: *mut *mut PsResponses,
) -> PsStatus {
    guard(|| {
        let pop = deref!(pop, "pop");
        let out = out!(out, "out");
        let Some(first) = pop.instances.first() else {
            return fail(PsStatus::InvalidArgument, "population is empty");
        };
        let challenges = try_ps!(ChallengeSet::random(first.n_stages(), n_challenges, challenge_seed));
        let table = try_ps!(collect_responses(&pop.instances, &challenges, k));
        *out = Box::into_raw(Box::new(PsResponses { table }));
        PsStatus::Ok
    })
}

/// Loads a CRP dump.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_responses_read_crp(path: *const c_char, out: *mut *mut PsResponses) -> PsStatus {
    guard(|| {
        let out = out!(out, "out");
        let path = match c_str(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let file = try_ps!(read_crp(Path::new(path)));
        *out = Box::into_raw(Box::new(PsResponses { table: file.table }));
        PsStatus::Ok
    })
}

/// Returns 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_responses_instance_count(r: *const PsResponses) -> usize {
    unsafe { r.as_ref() }.map_or(0, |r| r.table.instance_count())
}

/// Returns 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_responses_challenge_count(r: *const PsResponses) -> usize {
    unsafe { r.as_ref() }.map_or(0, |r| r.table.challenges().len())
}

/// 4-bit response of instance position `instance` to challenge position `challenge`; bit 1 is the least significant.
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_responses_get(r: *const PsResponses, instance: usize, challenge: usize, out: *mut u8) -> PsStatus {
    guard(|| {
        let r = deref!(r, "responses");
        let out = out!(out, "out");
        if instance >= r.table.instance_count() || challenge >= r.table.challenges().len() {
            return fail(PsStatus::InvalidArgument, "index out of range");
        }
        *out = r.table.response(instance, challenge).value();
        PsStatus::Ok
    })
}

/// # Safety
/// `r` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_responses_free(r: *mut PsResponses) {
    if !r.is_null() {
        drop(unsafe { Box::from_raw(r) });
    }
}

/// Spectrum of response bit `bit` (1..=4) over all unordered instance pairs.
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_build(r: *const PsResponses, bit: u32, buckets: usize, out: *mut *mut PsSpectrum) -> PsStatus {
    guard(|| {
        let r = deref!(r, "responses");
        let out = out!(out, "out");
        let vectors = try_ps!(r.table.bit_vectors(bit as usize));
        let spectrum = try_ps!(build_spectrum(&vectors, buckets, PairMode::UnorderedDistinct));
        *out = Box::into_raw(Box::new(PsSpectrum { spectrum }));
        PsStatus::Ok
    })
}

/// Returns 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_bucket_count(s: *const PsSpectrum) -> usize {
    unsafe { s.as_ref() }.map_or(0, |s| s.spectrum.bucket_count())
}

/// Copies bucket counts into `buf`, which must hold at least [`ps_spectrum_bucket_count`] entries.
///
/// # Safety
/// `s` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_counts(s: *const PsSpectrum, buf: *mut u64, len: usize) -> PsStatus {
    guard(|| {
        let s = deref!(s, "spectrum");
        if buf.is_null() {
            return fail(PsStatus::NullPointer, "buf is null");
        }
        let counts = s.spectrum.counts();
        if len < counts.len() {
            return fail(
                PsStatus::BufferTooSmall,
                format!("buffer holds {len}, need {}", counts.len()),
            );
        }
        unsafe { ptr::copy_nonoverlapping(counts.as_ptr(), buf, counts.len()) };
        PsStatus::Ok
    })
}

/// Mean and median pairwise coefficient.
///
/// # Safety
/// `s` must be a live handle; `mean` and `median` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_location(s: *const PsSpectrum, mean: *mut f64, median: *mut f64) -> PsStatus {
    guard(|| {
        let s = deref!(s, "spectrum");
        let mean = out!(mean, "mean");
        let median = out!(median, "median");
        *mean = s.spectrum.mean_coefficient();
        *median = s.spectrum.median_coefficient();
        PsStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_free(s: *mut PsSpectrum) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Compares `test` against `reference` on all four response bits.
///
/// A NaN `kl0` calibrates the KL threshold from the reference population.
/// `out_json` receives the report (free with [`ps_string_free`]); `out_fail`
/// is set to 1 if any bit fails and 0 otherwise.
///
/// # Safety
/// Handles must be live; `out_json` and `out_fail` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ps_compare(
    reference: *const PsResponses,
    test: *const PsResponses,
    buckets: usize,
    segments: usize,
    t0: f64,
    kl0: f64,
    out_json: *mut *mut c_char,
    out_fail: *mut i32,
) -> PsStatus {
    guard(|| {
        let reference = deref!(reference, "reference");
        let test = deref!(test, "test");
        let out_json = out!(out_json, "out_json");
        let out_fail = out!(out_fail, "out_fail");
        if reference.table.challenges().id() != test.table.challenges().id() {
            return fail(PsStatus::Incomparable, "populations were evaluated on different challenge sets");
        }
        let mut bits = Vec::new();
        for b in 1..=4 {
            let p_vec = try_ps!(reference.table.bit_vectors(b));
            let q_vec = try_ps!(test.table.bit_vectors(b));
            let th = Thresholds {
                segments,
                t0,
                kl0: if kl0.is_nan() {
                    try_ps!(calibrated_kl0(&p_vec, buckets, Thresholds::default().epsilon))
                } else {
                    kl0
                },
                ..Thresholds::default()
            };
            let p = try_ps!(build_spectrum(&p_vec, buckets, PairMode::UnorderedDistinct));
            let q = try_ps!(build_spectrum(&q_vec, buckets, PairMode::UnorderedDistinct));
            bits.push(try_ps!(compare_spectra(&q, &p, &th)));
        }
        let report = SpectrumComparisonReport { bits };
        *out_fail = i32::from(report.verdict() == Verdict::Fail);
        give_string(report.to_json(), out_json)
    })
}
