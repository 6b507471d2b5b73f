//! C ABI over `clinote-core`.
//!
//! Conventions:
//! - Fallible calls return a [`ClinoteStatus`]; on failure a message is kept
//!   per thread and read with [`clinote_last_error`].
//! - Handles ([`ClinoteQuantized`], [`ClinoteLora`]) are opaque, created by
//!   a constructor that writes through an out-pointer and released with the
//!   matching `_free` function.
//! - Matrices are dense row-major `double` arrays.
//! - Strings returned to the caller are owned and released with
//!   [`clinote_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clinote_core::adapters::{
    dequantize, lora_forward, lora_init, lora_merge, quantize_blockwise, LoraAdapter, Matrix, QuantScheme,
    QuantizedTensor, Vector,
};
use clinote_core::dialogue::normalize_text;
use clinote_core::metrics::{bert_score, rouge_lsum_tokens, rouge_n, EmbeddedSequence, TextProcessor};
use clinote_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClinoteStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Bad shapes, sizes or parameter values.
    InvalidArgument = 3,
    /// The inputs were well-formed but could not be processed.
    DataError = 4,
    /// A handle or buffer holds inconsistent data.
    Corrupt = 5,
    /// An output buffer is smaller than required.
    BufferTooSmall = 6,
    /// Internal panic caught at the boundary.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClinoteQuantScheme {
    Absmax4 = 0,
    Nf4 = 1,
}

impl From<ClinoteQuantScheme> for QuantScheme {
    fn from(s: ClinoteQuantScheme) -> Self {
        match s {
            ClinoteQuantScheme::Absmax4 => QuantScheme::Absmax4,
            ClinoteQuantScheme::Nf4 => QuantScheme::Nf4,
        }
    }
}

/// Precision, recall and F1 of a ROUGE or BERTScore comparison.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClinoteScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Opaque 4-bit quantized tensor.
pub struct ClinoteQuantized {
    inner: QuantizedTensor,
}

/// Opaque low-rank adapter.
pub struct ClinoteLora {
    inner: LoraAdapter,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: ClinoteStatus,
    message: String,
}

impl Failure {
    fn new(status: ClinoteStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) | Error::Config(_) => ClinoteStatus::InvalidArgument,
            Error::Corrupt(_) => ClinoteStatus::Corrupt,
            _ => ClinoteStatus::DataError,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', "\\0")).expect("interior NULs replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ClinoteStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClinoteStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(_) => {
            set_last_error("internal panic");
            ClinoteStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure::new(ClinoteStatus::NullPointer, format!("`{name}` is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(ClinoteStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

/// Empty slices may come with a NULL pointer.
unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

fn checked_area(rows: usize, cols: usize) -> Result<usize, Failure> {
    rows.checked_mul(cols)
        .ok_or_else(|| Failure::new(ClinoteStatus::InvalidArgument, "matrix size overflows"))
}

fn row_major(m: &Matrix, out: &mut [f64]) {
    for (i, row) in m.row_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[i * m.ncols() + j] = *v;
        }
    }
}

/// Message of the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn clinote_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn clinote_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Normalizes `text` (NFC, lowercase, restricted punctuation, collapsed
/// whitespace). Returns NULL on failure; free the result with
/// [`clinote_string_free`].
///
/// # Safety
/// `text` must be NULL or a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn clinote_normalize_text(text: *const c_char) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let text = str_arg(text, "text")?;
        // normalization drops control characters, so there is no interior NUL
        result = CString::new(normalize_text(text)).expect("no NUL").into_raw();
        Ok(())
    });
    result
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn clinote_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// ROUGE-N F1/precision/recall between two texts, tokenized as normalized
/// whitespace-separated words.
///
/// # Safety
/// `candidate` and `reference` must be valid NUL-terminated strings and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn clinote_rouge_n(
    candidate: *const c_char,
    reference: *const c_char,
    n: usize,
    out: *mut ClinoteScore,
) -> ClinoteStatus {
    guard(|| {
        let proc = TextProcessor::default();
        let c = proc.tokens(str_arg(candidate, "candidate")?);
        let r = proc.tokens(str_arg(reference, "reference")?);
        let out = out_ref(out, "out")?;
        let s = rouge_n(&c, &r, n)?;
        *out = ClinoteScore {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        };
        Ok(())
    })
}

/// Summary-level ROUGE-L between two texts; sentences end at newlines and
/// at `.`, `?` or `!` followed by whitespace.
///
/// # Safety
/// As for [`clinote_rouge_n`].
#[no_mangle]
pub unsafe extern "C" fn clinote_rouge_lsum(
    candidate: *const c_char,
    reference: *const c_char,
    out: *mut ClinoteScore,
) -> ClinoteStatus {
    guard(|| {
        let proc = TextProcessor::default();
        let c = proc.sentences(str_arg(candidate, "candidate")?);
        let r = proc.sentences(str_arg(reference, "reference")?);
        let out = out_ref(out, "out")?;
        let s = rouge_lsum_tokens(&c, &r);
        *out = ClinoteScore {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        };
        Ok(())
    })
}

fn embedded(vectors: &[f64], len: usize, dim: usize) -> Result<EmbeddedSequence, Failure> {
    let rows = vectors.chunks(dim).map(<[f64]>::to_vec).collect();
    let tokens = (0..len).map(|i| i.to_string()).collect();
    Ok(EmbeddedSequence::new(tokens, rows)?)
}

/// Unweighted BERTScore by greedy cosine matching. `candidate` holds
/// `candidate_len` row-major vectors of length `dim`, likewise `reference`.
///
/// # Safety
/// The arrays must hold `len * dim` doubles each; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn clinote_bert_score(
    candidate: *const f64,
    candidate_len: usize,
    reference: *const f64,
    reference_len: usize,
    dim: usize,
    out: *mut ClinoteScore,
) -> ClinoteStatus {
    guard(|| {
        if dim == 0 || candidate_len == 0 || reference_len == 0 {
            return Err(Failure::new(
                ClinoteStatus::InvalidArgument,
                "sequences and dimension must be non-empty",
            ));
        }
        let c = slice_arg(candidate, checked_area(candidate_len, dim)?, "candidate")?;
        let r = slice_arg(reference, checked_area(reference_len, dim)?, "reference")?;
        let out = out_ref(out, "out")?;
        let s = bert_score(&embedded(c, candidate_len, dim)?, &embedded(r, reference_len, dim)?, None)?;
        *out = ClinoteScore {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        };
        Ok(())
    })
}

/// Quantizes `len` values in blocks of `block_size`.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be valid. On success
/// `*out` receives a handle to release with [`clinote_quantized_free`].
#[no_mangle]
pub unsafe extern "C" fn clinote_quantize(
    values: *const f64,
    len: usize,
    block_size: usize,
    scheme: ClinoteQuantScheme,
    out: *mut *mut ClinoteQuantized,
) -> ClinoteStatus {
    guard(|| {
        let values = slice_arg(values, len, "values")?;
        let out = out_ref(out, "out")?;
        let q = quantize_blockwise(values, block_size, scheme.into())?;
        *out = Box::into_raw(Box::new(ClinoteQuantized { inner: q }));
        Ok(())
    })
}

/// Number of quantized values, 0 for NULL.
///
/// # Safety
/// `q` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn clinote_quantized_len(q: *const ClinoteQuantized) -> usize {
    q.as_ref().map_or(0, |q| q.inner.original_length)
}

/// Number of blocks (and scales), 0 for NULL.
///
/// # Safety
/// `q` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn clinote_quantized_num_blocks(q: *const ClinoteQuantized) -> usize {
    q.as_ref().map_or(0, |q| q.inner.num_blocks())
}

/// Copies the codes into `out`, which must have room for
/// [`clinote_quantized_len`] entries.
///
/// # Safety
/// `q` must be a live handle and `out` point to `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn clinote_quantized_codes(
    q: *const ClinoteQuantized,
    out: *mut i8,
    capacity: usize,
) -> ClinoteStatus {
    guard(|| {
        let q = &q.as_ref().ok_or_else(|| null("q"))?.inner;
        if capacity < q.codes.len() {
            return Err(Failure::new(
                ClinoteStatus::BufferTooSmall,
                format!("need {} codes, buffer holds {capacity}", q.codes.len()),
            ));
        }
        out_slice(out, q.codes.len(), "out")?.copy_from_slice(&q.codes);
        Ok(())
    })
}

/// Copies the stored per-block scales into `out` (`absmax / 7` for absmax4,
/// `absmax` for nf4).
///
/// # Safety
/// `q` must be a live handle and `out` point to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn clinote_quantized_scales(
    q: *const ClinoteQuantized,
    out: *mut f64,
    capacity: usize,
) -> ClinoteStatus {
    guard(|| {
        let q = &q.as_ref().ok_or_else(|| null("q"))?.inner;
        let scales = q.scales();
        if capacity < scales.len() {
            return Err(Failure::new(
                ClinoteStatus::BufferTooSmall,
                format!("need {} scales, buffer holds {capacity}", scales.len()),
            ));
        }
        out_slice(out, scales.len(), "out")?.copy_from_slice(&scales);
        Ok(())
    })
}

/// Reconstructs the values into `out`.
///
/// # Safety
/// `q` must be a live handle and `out` point to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn clinote_dequantize(
    q: *const ClinoteQuantized,
    out: *mut f64,
    capacity: usize,
) -> ClinoteStatus {
    guard(|| {
        let q = &q.as_ref().ok_or_else(|| null("q"))?.inner;
        if capacity < q.original_length {
            return Err(Failure::new(
                ClinoteStatus::BufferTooSmall,
                format!("need {} values, buffer holds {capacity}", q.original_length),
            ));
        }
        let values = dequantize(q)?;
        out_slice(out, values.len(), "out")?.copy_from_slice(&values);
        Ok(())
    })
}

/// Releases a quantized tensor. NULL is ignored.
///
/// # Safety
/// `q` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn clinote_quantized_free(q: *mut ClinoteQuantized) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Fresh rank-`r` adapter for a `d × k` matrix: `A` seeded uniform, `B = 0`.
///
/// # Safety
/// `out` must be valid; on success release `*out` with
/// [`clinote_lora_free`].
#[no_mangle]
pub unsafe extern "C" fn clinote_lora_init(
    d: usize,
    k: usize,
    r: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut ClinoteLora,
) -> ClinoteStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = lora_init(d, k, r, alpha, seed)?;
        *out = Box::into_raw(Box::new(ClinoteLora { inner }));
        Ok(())
    })
}

/// Adapter from explicit factors: `a` is `r × k`, `b` is `d × r`.
///
/// # Safety
/// `a` and `b` must hold `r * k` and `d * r` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn clinote_lora_from_parts(
    a: *const f64,
    b: *const f64,
    d: usize,
    k: usize,
    r: usize,
    alpha: f64,
    out: *mut *mut ClinoteLora,
) -> ClinoteStatus {
    guard(|| {
        let a = slice_arg(a, checked_area(r, k)?, "a")?;
        let b = slice_arg(b, checked_area(d, r)?, "b")?;
        let out = out_ref(out, "out")?;
        let inner = LoraAdapter::from_parts(Matrix::from_row_slice(r, k, a), Matrix::from_row_slice(d, r, b), alpha)?;
        *out = Box::into_raw(Box::new(ClinoteLora { inner }));
        Ok(())
    })
}

/// Writes `d`, `k` and rank through the given pointers (any may be NULL).
///
/// # Safety
/// `lora` must be a live handle; non-NULL out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn clinote_lora_shape(
    lora: *const ClinoteLora,
    d: *mut usize,
    k: *mut usize,
    r: *mut usize,
) -> ClinoteStatus {
    guard(|| {
        let lora = &lora.as_ref().ok_or_else(|| null("lora"))?.inner;
        for (p, v) in [(d, lora.d()), (k, lora.k()), (r, lora.rank())] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// `out = W·x + (alpha/r)·B·(A·x)` for row-major `w` (`d × k`).
///
/// # Safety
/// `w`, `x` and `out` must hold `d * k`, `k` and `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn clinote_lora_forward(
    lora: *const ClinoteLora,
    w: *const f64,
    x: *const f64,
    out: *mut f64,
) -> ClinoteStatus {
    guard(|| {
        let lora = &lora.as_ref().ok_or_else(|| null("lora"))?.inner;
        let (d, k) = (lora.d(), lora.k());
        let w = Matrix::from_row_slice(d, k, slice_arg(w, d * k, "w")?);
        let x = Vector::from_column_slice(slice_arg(x, k, "x")?);
        let y = lora_forward(&w, lora, &x)?;
        out_slice(out, d, "out")?.copy_from_slice(y.as_slice());
        Ok(())
    })
}

/// `out = W + (alpha/r)·B·A`, all row-major `d × k`.
///
/// # Safety
/// `w` and `out` must each hold `d * k` doubles.
#[no_mangle]
pub unsafe extern "C" fn clinote_lora_merge(lora: *const ClinoteLora, w: *const f64, out: *mut f64) -> ClinoteStatus {
    guard(|| {
        let lora = &lora.as_ref().ok_or_else(|| null("lora"))?.inner;
        let (d, k) = (lora.d(), lora.k());
        let w = Matrix::from_row_slice(d, k, slice_arg(w, d * k, "w")?);
        let merged = lora_merge(&w, lora)?;
        row_major(&merged, out_slice(out, d * k, "out")?);
        Ok(())
    })
}

/// Releases an adapter. NULL is ignored.
///
/// # Safety
/// `lora` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn clinote_lora_free(lora: *mut ClinoteLora) {
    if !lora.is_null() {
        drop(Box::from_raw(lora));
    }
}
