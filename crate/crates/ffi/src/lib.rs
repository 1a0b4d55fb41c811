//! C ABI over the ciugraph pipeline.
//!
//! Every fallible call returns a [`CiuStatus`]; on failure the message is
//! available from [`ciu_last_error`] on the same thread. Strings handed out
//! by the library are NUL-terminated UTF-8 and must be released with
//! [`ciu_string_free`]. Pipelines are opaque and immutable after creation,
//! so one handle may be shared across threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ciugraph::error::Error;
use ciugraph::render::{render_svg, to_dot, SvgOptions};
use ciugraph::{Pipeline, RunConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiuStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The transcript could not be read (bad encoding, malformed CHAT).
    Input = 3,
    /// A lexicon, coordinate or lemma-rule table failed to load.
    Config = 4,
    /// Graph, feature or statistics computation failed.
    Compute = 5,
    /// The library panicked; the handle should not be reused.
    Panic = 6,
}

/// Opaque pipeline handle.
pub struct CiuPipeline {
    inner: Pipeline,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(CiuStatus, String);

impl Failure {
    fn null(name: &str) -> Self {
        Failure(CiuStatus::NullArgument, format!("{name} is NULL"))
    }
}

fn input_error(e: Error) -> Failure {
    Failure(CiuStatus::Input, e.to_string())
}

fn compute_error(e: Error) -> Failure {
    Failure(CiuStatus::Compute, e.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CiuStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            CiuStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            CiuStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` is NULL or a valid NUL-terminated string.
unsafe fn optional_str<'a>(ptr: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if ptr.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(Some)
        .map_err(|_| Failure(CiuStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// # Safety
/// `ptr` is NULL or a valid NUL-terminated string.
unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    optional_str(ptr, name)?.ok_or_else(|| Failure::null(name))
}

/// # Safety
/// `data` points to `len` readable bytes, or `len` is 0.
unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Failure::null("data"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// # Safety
/// `out` is NULL or valid for one pointer write.
unsafe fn write_string(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("out"));
    }
    let c = CString::new(text).map_err(|e| Failure(CiuStatus::Compute, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// # Safety
/// `pipeline` is NULL or a live handle from [`ciu_pipeline_new`].
unsafe fn pipeline_ref<'a>(pipeline: *const CiuPipeline) -> Result<&'a Pipeline, Failure> {
    pipeline
        .as_ref()
        .map(|p| &p.inner)
        .ok_or_else(|| Failure::null("pipeline"))
}

/// Builds a pipeline. Each path may be NULL to use `$CIUGRAPH_CONFIG_DIR`
/// or the bundled default table.
///
/// # Safety
/// String arguments are NULL or NUL-terminated; `out` is valid for one
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn ciu_pipeline_new(
    lexicon_path: *const c_char,
    coords_path: *const c_char,
    lemma_rules_path: *const c_char,
    out: *mut *mut CiuPipeline,
) -> CiuStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let path = |p, name| optional_str(p, name).map(|s| s.map(PathBuf::from));
        let config = RunConfig {
            lexicon_path: path(lexicon_path, "lexicon_path")?,
            coords_path: path(coords_path, "coords_path")?,
            lemma_rules_path: path(lemma_rules_path, "lemma_rules_path")?,
            ..RunConfig::default()
        };
        let inner = config.load().map_err(|e| Failure(CiuStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(CiuPipeline { inner }));
        Ok(())
    })
}

/// Releases a pipeline. NULL is ignored.
///
/// # Safety
/// `pipeline` is NULL or a handle from [`ciu_pipeline_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ciu_pipeline_free(pipeline: *mut CiuPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// Extracts the CIU sequence of a CHAT or plain-text transcript as JSON.
///
/// # Safety
/// `pipeline` is a live handle; `transcript_id` is NUL-terminated; `data`
/// points to `len` bytes; `out_json` is valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ciu_extract(
    pipeline: *const CiuPipeline,
    transcript_id: *const c_char,
    data: *const u8,
    len: usize,
    out_json: *mut *mut c_char,
) -> CiuStatus {
    guard(|| {
        let p = pipeline_ref(pipeline)?;
        let id = required_str(transcript_id, "transcript_id")?;
        let seq = p.extract_bytes(id, bytes(data, len)?, None).map_err(input_error)?;
        write_string(out_json, seq.to_json())
    })
}

/// Computes the twelve graph features of a transcript as JSON; features
/// of an empty sequence are null.
///
/// # Safety
/// As for [`ciu_extract`].
#[no_mangle]
pub unsafe extern "C" fn ciu_features(
    pipeline: *const CiuPipeline,
    transcript_id: *const c_char,
    data: *const u8,
    len: usize,
    out_json: *mut *mut c_char,
) -> CiuStatus {
    guard(|| {
        let p = pipeline_ref(pipeline)?;
        let id = required_str(transcript_id, "transcript_id")?;
        let seq = p.extract_bytes(id, bytes(data, len)?, None).map_err(input_error)?;
        let fv = p.features(&seq).map_err(compute_error)?;
        let json = serde_json::to_string_pretty(&fv).map_err(|e| Failure(CiuStatus::Compute, e.to_string()))?;
        write_string(out_json, json)
    })
}

/// # Safety
/// As for [`ciu_extract`].
unsafe fn render(
    pipeline: *const CiuPipeline,
    transcript_id: *const c_char,
    data: *const u8,
    len: usize,
    out: *mut *mut c_char,
    draw: impl FnOnce(&ciugraph::graph::SpatioSemanticGraph) -> String,
) -> CiuStatus {
    guard(|| {
        let p = pipeline_ref(pipeline)?;
        let id = required_str(transcript_id, "transcript_id")?;
        let seq = p.extract_bytes(id, bytes(data, len)?, None).map_err(input_error)?;
        let graph = p.graph(&seq).map_err(compute_error)?;
        write_string(out, draw(&graph))
    })
}

/// Renders the spatio-semantic graph of a transcript as DOT.
///
/// # Safety
/// As for [`ciu_extract`].
#[no_mangle]
pub unsafe extern "C" fn ciu_render_dot(
    pipeline: *const CiuPipeline,
    transcript_id: *const c_char,
    data: *const u8,
    len: usize,
    out_dot: *mut *mut c_char,
) -> CiuStatus {
    render(pipeline, transcript_id, data, len, out_dot, to_dot)
}

/// Renders the spatio-semantic graph of a transcript as SVG.
///
/// # Safety
/// As for [`ciu_extract`].
#[no_mangle]
pub unsafe extern "C" fn ciu_render_svg(
    pipeline: *const CiuPipeline,
    transcript_id: *const c_char,
    data: *const u8,
    len: usize,
    out_svg: *mut *mut c_char,
) -> CiuStatus {
    render(pipeline, transcript_id, data, len, out_svg, |g| {
        render_svg(g, &SvgOptions::default())
    })
}

/// Upper tail P(F > f) of the F distribution with (df1, df2) degrees of
/// freedom.
///
/// # Safety
/// `out` is valid for one double write.
#[no_mangle]
pub unsafe extern "C" fn ciu_f_sf(f: f64, df1: f64, df2: f64, out: *mut f64) -> CiuStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ciugraph::stats::f_sf(f, df1, df2).map_err(compute_error)?;
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` is NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ciu_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or "" after a success.
/// Valid until the next call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn ciu_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ciu_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
