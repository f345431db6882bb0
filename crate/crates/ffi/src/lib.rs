//! C ABI over the threshold fragment and subset commitment stacks.
//!
//! Conventions, which every exported function follows:
//!
//! - Fallible calls return an [`RtStatus`]. Out-pointers are written only
//!   when the call returns `RT_STATUS_OK`.
//! - Handles (`RtPlan`, `RtFragment`, `RtFragmentSet`) are opaque. Release
//!   them with the matching `rt_*_free`; the free functions ignore null.
//! - Variable-length results come back as an [`RtBuffer`] allocated by this
//!   library and released with [`rt_buffer_free`]. Text payloads are UTF-8
//!   without a trailing NUL; treat them as sized bytes, not C strings.
//! - After any failure, [`rt_last_error_message`] returns a NUL-terminated
//!   description for the calling thread, valid until that thread's next
//!   failing call.
//!
//! Nothing here is thread-hostile: handles may move between threads, but a
//! single handle must not be used concurrently with its free.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use rand::rngs::OsRng;

use raptor_threshold::commitment::format::{
    decode_commitments, decode_keypair, decode_receipt, decode_reveals, encode_commitments,
    encode_keypair, encode_receipt, encode_reveals,
};
use raptor_threshold::commitment::receipt::{receipt_keygen, receipt_sign, receipt_verify};
use raptor_threshold::commitment::{
    commit_selection, verify_selection, CommitmentError, SelectionSet,
};
use raptor_threshold::threshold::format::{decode_fragment, encode_fragment};
use raptor_threshold::threshold::{
    combine_fragments, max_threshold, plan_threshold, split_key, CombineOutcome, Fragment, KeyId,
    PlanOptions, ThresholdError, ThresholdPlan,
};
use raptor_threshold::Overhead;

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtStatus {
    /// The call succeeded and all out-pointers are populated.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A parameter was out of range or otherwise unusable.
    InvalidParameter = 2,
    /// The requested threshold cannot be met at these sizing parameters.
    InfeasibleThreshold = 3,
    /// Fragments from different keys were combined.
    MixedKeyId = 4,
    /// The pooled fragments do not determine the key.
    Undecodable = 5,
    /// Input bytes failed to parse or validate.
    MalformedInput = 6,
    /// An internal invariant failed; file a bug.
    Internal = 7,
}

/// Sizing plan for one key split. Opaque; see `rt_plan_new`.
pub struct RtPlan(ThresholdPlan);

/// One member's fragment. Opaque; see `rt_fragment_decode`.
pub struct RtFragment(Fragment);

/// All fragments from one split, indexed by member id. Opaque.
pub struct RtFragmentSet(Vec<Fragment>);

/// Bytes allocated by this library. Release with `rt_buffer_free`.
#[repr(C)]
pub struct RtBuffer {
    pub data: *mut u8,
    pub len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(CString::new(text).expect("NULs stripped"));
    });
}

fn fail(status: RtStatus, message: impl Display) -> RtStatus {
    set_error(message);
    status
}

fn threshold_fail(err: ThresholdError) -> RtStatus {
    let status = match &err {
        ThresholdError::InfeasibleThreshold { .. } => RtStatus::InfeasibleThreshold,
        ThresholdError::MixedKeyId { .. } => RtStatus::MixedKeyId,
        ThresholdError::DuplicateMember(_) | ThresholdError::MalformedFragment(_) => {
            RtStatus::MalformedInput
        }
        _ => RtStatus::InvalidParameter,
    };
    fail(status, err)
}

fn commitment_fail(err: CommitmentError) -> RtStatus {
    let status = match &err {
        CommitmentError::InvalidParameter(_) => RtStatus::InvalidParameter,
        _ => RtStatus::MalformedInput,
    };
    fail(status, err)
}

/// Traps panics at the ABI boundary; unwinding into C is undefined.
fn guarded(body: impl FnOnce() -> RtStatus) -> RtStatus {
    catch_unwind(AssertUnwindSafe(body))
        .unwrap_or_else(|_| fail(RtStatus::Internal, "internal panic; file a bug"))
}

/// Reads (ptr, len) as a byte slice. Null is accepted only for empty input.
unsafe fn slice_arg<'a>(ptr: *const u8, len: usize) -> Option<&'a [u8]> {
    if ptr.is_null() {
        (len == 0).then(|| [].as_slice())
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

unsafe fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, RtStatus> {
    if ptr.is_null() {
        return Err(fail(RtStatus::NullArgument, "string argument is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(RtStatus::InvalidParameter, "string argument is not UTF-8"))
}

fn parse_overhead(text: &str, what: &str) -> Result<Overhead, RtStatus> {
    text.parse()
        .map_err(|e| fail(RtStatus::InvalidParameter, format!("{what}: {e}")))
}

fn buffer_from(bytes: Vec<u8>) -> *mut RtBuffer {
    let boxed = bytes.into_boxed_slice();
    let len = boxed.len();
    let data = Box::into_raw(boxed) as *mut u8;
    Box::into_raw(Box::new(RtBuffer { data, len }))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> RtStatus {
    if out.is_null() {
        return fail(RtStatus::NullArgument, "out-pointer is null");
    }
    out.write(value);
    RtStatus::Ok
}

/// Returns the error text from the calling thread's last failed call, or
/// null if nothing failed yet. The pointer stays valid until this thread's
/// next failing call; do not free it.
#[no_mangle]
pub extern "C" fn rt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Frees a buffer returned by this library. Null is ignored.
///
/// # Safety
/// `buffer` must be a pointer previously returned through an `RtBuffer`
/// out-parameter of this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rt_buffer_free(buffer: *mut RtBuffer) {
    if buffer.is_null() {
        return;
    }
    let buffer = Box::from_raw(buffer);
    drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(
        buffer.data,
        buffer.len,
    )));
}

/// Computes the largest feasible threshold for a pair of exact decimal
/// overheads, for example "1.1" and "0.99".
///
/// # Safety
/// `overhead_hi` and `overhead_lo` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rt_max_threshold(
    overhead_hi: *const c_char,
    overhead_lo: *const c_char,
    out: *mut u64,
) -> RtStatus {
    guarded(|| {
        let hi = match str_arg(overhead_hi) {
            Ok(text) => text,
            Err(status) => return status,
        };
        let lo = match str_arg(overhead_lo) {
            Ok(text) => text,
            Err(status) => return status,
        };
        let hi = match parse_overhead(hi, "overhead_hi") {
            Ok(v) => v,
            Err(status) => return status,
        };
        let lo = match parse_overhead(lo, "overhead_lo") {
            Ok(v) => v,
            Err(status) => return status,
        };
        match max_threshold(&hi, &lo) {
            Ok(max) => write_out(out, max),
            Err(e) => threshold_fail(e),
        }
    })
}

/// Plans an s-of-n split for a key of `key_len` bytes cut into symbols of
/// `symbol_size` bytes, using the default overheads (1.1, 0.99) and robust
/// soliton parameters (0.03, 0.5).
///
/// # Safety
/// `out` must be writable. The returned plan must be released with
/// `rt_plan_free`.
#[no_mangle]
pub unsafe extern "C" fn rt_plan_new(
    n: u32,
    s: u16,
    key_len: usize,
    symbol_size: u32,
    out: *mut *mut RtPlan,
) -> RtStatus {
    guarded(|| {
        match plan_threshold(n, s, key_len, symbol_size, &PlanOptions::default()) {
            Ok(plan) => write_out(out, Box::into_raw(Box::new(RtPlan(plan)))),
            Err(e) => threshold_fail(e),
        }
    })
}

/// `rt_plan_new` with every knob exposed: exact decimal overhead strings
/// and robust soliton parameters.
///
/// # Safety
/// As `rt_plan_new`; the overhead strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rt_plan_new_with_options(
    n: u32,
    s: u16,
    key_len: usize,
    symbol_size: u32,
    overhead_hi: *const c_char,
    overhead_lo: *const c_char,
    c: f64,
    delta: f64,
    out: *mut *mut RtPlan,
) -> RtStatus {
    guarded(|| {
        let hi = match str_arg(overhead_hi).and_then(|t| parse_overhead(t, "overhead_hi")) {
            Ok(v) => v,
            Err(status) => return status,
        };
        let lo = match str_arg(overhead_lo).and_then(|t| parse_overhead(t, "overhead_lo")) {
            Ok(v) => v,
            Err(status) => return status,
        };
        let opts = PlanOptions {
            overhead_hi: hi,
            overhead_lo: lo,
            c,
            delta,
        };
        match plan_threshold(n, s, key_len, symbol_size, &opts) {
            Ok(plan) => write_out(out, Box::into_raw(Box::new(RtPlan(plan)))),
            Err(e) => threshold_fail(e),
        }
    })
}

/// # Safety
/// `plan` must come from `rt_plan_new*` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rt_plan_free(plan: *mut RtPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Reads the plan's sizing: group size n, threshold s, input symbols k,
/// symbols per fragment f, symbol size in bytes, and the largest key the
/// plan can carry. Any out-pointer may be null to skip that field.
///
/// # Safety
/// `plan` must be a live plan handle; non-null out-pointers must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rt_plan_dimensions(
    plan: *const RtPlan,
    out_n: *mut u32,
    out_s: *mut u16,
    out_k: *mut u32,
    out_f: *mut u32,
    out_symbol_size: *mut u32,
    out_max_key_len: *mut usize,
) -> RtStatus {
    guarded(|| {
        let Some(plan) = plan.as_ref() else {
            return fail(RtStatus::NullArgument, "plan handle is null");
        };
        if !out_n.is_null() {
            out_n.write(plan.0.n());
        }
        if !out_s.is_null() {
            out_s.write(plan.0.s());
        }
        if !out_k.is_null() {
            out_k.write(plan.0.k());
        }
        if !out_f.is_null() {
            out_f.write(plan.0.f());
        }
        if !out_symbol_size.is_null() {
            out_symbol_size.write(plan.0.symbol_size());
        }
        if !out_max_key_len.is_null() {
            out_max_key_len.write(plan.0.max_key_len());
        }
        RtStatus::Ok
    })
}

/// Splits a key into the plan's n fragments. `key_id` must point to 16
/// bytes naming the key, or be null to draw a random id from the OS.
///
/// # Safety
/// `key` must point to `key_len` readable bytes; `key_id` must be null or
/// point to 16 readable bytes; `out` must be writable. The returned set
/// must be released with `rt_fragment_set_free`.
#[no_mangle]
pub unsafe extern "C" fn rt_split(
    plan: *const RtPlan,
    key: *const u8,
    key_len: usize,
    key_id: *const u8,
    out: *mut *mut RtFragmentSet,
) -> RtStatus {
    guarded(|| {
        let Some(plan) = plan.as_ref() else {
            return fail(RtStatus::NullArgument, "plan handle is null");
        };
        let Some(key) = slice_arg(key, key_len) else {
            return fail(RtStatus::NullArgument, "key pointer is null");
        };
        let key_id = if key_id.is_null() {
            KeyId::from_rng(&mut OsRng)
        } else {
            let mut bytes = [0u8; KeyId::LEN];
            bytes.copy_from_slice(slice::from_raw_parts(key_id, KeyId::LEN));
            KeyId::new(bytes)
        };
        match split_key(key, &plan.0, key_id) {
            Ok(fragments) => write_out(out, Box::into_raw(Box::new(RtFragmentSet(fragments)))),
            Err(e) => threshold_fail(e),
        }
    })
}

/// # Safety
/// `set` must come from `rt_split` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rt_fragment_set_free(set: *mut RtFragmentSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of fragments in the set; zero when `set` is null.
///
/// # Safety
/// `set` must be null or a live fragment-set handle.
#[no_mangle]
pub unsafe extern "C" fn rt_fragment_set_len(set: *const RtFragmentSet) -> usize {
    set.as_ref().map_or(0, |set| set.0.len())
}

/// Serializes fragment `index` of the set to its binary wire form.
///
/// # Safety
/// `set` must be a live fragment-set handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rt_fragment_set_encode(
    set: *const RtFragmentSet,
    index: usize,
    out: *mut *mut RtBuffer,
) -> RtStatus {
    guarded(|| {
        let Some(set) = set.as_ref() else {
            return fail(RtStatus::NullArgument, "fragment set handle is null");
        };
        let Some(fragment) = set.0.get(index) else {
            return fail(
                RtStatus::InvalidParameter,
                format!("fragment index {index} out of range 0..{}", set.0.len()),
            );
        };
        write_out(out, buffer_from(encode_fragment(fragment)))
    })
}

/// Parses and validates one fragment from its binary wire form.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable. The
/// returned fragment must be released with `rt_fragment_free`.
#[no_mangle]
pub unsafe extern "C" fn rt_fragment_decode(
    data: *const u8,
    len: usize,
    out: *mut *mut RtFragment,
) -> RtStatus {
    guarded(|| {
        let Some(data) = slice_arg(data, len) else {
            return fail(RtStatus::NullArgument, "fragment bytes pointer is null");
        };
        match decode_fragment(data) {
            Ok(fragment) => write_out(out, Box::into_raw(Box::new(RtFragment(fragment)))),
            Err(e) => threshold_fail(e),
        }
    })
}

/// # Safety
/// `fragment` must come from `rt_fragment_decode` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rt_fragment_free(fragment: *mut RtFragment) {
    if !fragment.is_null() {
        drop(Box::from_raw(fragment));
    }
}

/// Reads a fragment's member id and 16-byte key id. Either out-pointer may
/// be null to skip that field.
///
/// # Safety
/// `fragment` must be a live fragment handle; a non-null `out_key_id` must
/// point to 16 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rt_fragment_info(
    fragment: *const RtFragment,
    out_member_id: *mut u32,
    out_key_id: *mut u8,
) -> RtStatus {
    guarded(|| {
        let Some(fragment) = fragment.as_ref() else {
            return fail(RtStatus::NullArgument, "fragment handle is null");
        };
        if !out_member_id.is_null() {
            out_member_id.write(fragment.0.member_id);
        }
        if !out_key_id.is_null() {
            std::ptr::copy_nonoverlapping(
                fragment.0.key_id.as_bytes().as_ptr(),
                out_key_id,
                KeyId::LEN,
            );
        }
        RtStatus::Ok
    })
}

/// Pools fragments and recovers the key. Success requires any s of the
/// original n fragments; fewer, or an unlucky non-threshold subset, returns
/// `RT_STATUS_UNDECODABLE`.
///
/// # Safety
/// `fragments` must point to `count` live fragment handles; `out_key` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn rt_combine(
    fragments: *const *const RtFragment,
    count: usize,
    out_key: *mut *mut RtBuffer,
) -> RtStatus {
    guarded(|| {
        if fragments.is_null() {
            return fail(RtStatus::NullArgument, "fragment array is null");
        }
        let handles = slice::from_raw_parts(fragments, count);
        let mut pooled = Vec::with_capacity(count);
        for (i, handle) in handles.iter().enumerate() {
            let Some(fragment) = handle.as_ref() else {
                return fail(RtStatus::NullArgument, format!("fragment {i} is null"));
            };
            pooled.push(fragment.0.clone());
        }
        match combine_fragments(&pooled) {
            Ok(CombineOutcome::Decoded { key, .. }) => write_out(out_key, buffer_from(key)),
            Ok(CombineOutcome::Undecodable { report }) => fail(
                RtStatus::Undecodable,
                format!(
                    "{} symbols reached rank {}; the key is undetermined",
                    report.symbols_used, report.rank
                ),
            ),
            Err(e) => threshold_fail(e),
        }
    })
}

/// Commits to a subset of the universe `1..=universe_size`. `chosen` lists
/// the selected indices (null allowed when `chosen_len` is zero). Writes
/// two UTF-8 documents: the shareable commitment list and the reveal list
/// that must stay private until opening time. The same `base_seed`
/// reproduces the same documents.
///
/// # Safety
/// `chosen` must point to `chosen_len` readable values or be null when
/// empty; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn rt_commit_selection(
    universe_size: u64,
    chosen: *const u64,
    chosen_len: usize,
    prime_bits: u32,
    base_seed: u64,
    out_commitments: *mut *mut RtBuffer,
    out_reveals: *mut *mut RtBuffer,
) -> RtStatus {
    guarded(|| {
        let chosen = if chosen.is_null() {
            if chosen_len != 0 {
                return fail(RtStatus::NullArgument, "chosen pointer is null");
            }
            &[]
        } else {
            slice::from_raw_parts(chosen, chosen_len)
        };
        let selection = match SelectionSet::new(universe_size, chosen.iter().copied()) {
            Ok(sel) => sel,
            Err(e) => return commitment_fail(e),
        };
        let (commitments, reveals) = match commit_selection(&selection, prime_bits, base_seed) {
            Ok(pair) => pair,
            Err(e) => return commitment_fail(e),
        };
        if out_commitments.is_null() || out_reveals.is_null() {
            return fail(RtStatus::NullArgument, "out-pointer is null");
        }
        out_commitments.write(buffer_from(
            encode_commitments(universe_size, &commitments).into_bytes(),
        ));
        out_reveals.write(buffer_from(
            encode_reveals(universe_size, &reveals).into_bytes(),
        ));
        RtStatus::Ok
    })
}

/// Verifies a reveal document against a commitment document and reports
/// how many objects came out Selected, NotSelected, and Invalid. Any
/// out-pointer may be null to skip that count.
///
/// # Safety
/// The two documents must point to readable UTF-8 bytes of the given
/// lengths; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn rt_verify_selection(
    commitments: *const u8,
    commitments_len: usize,
    reveals: *const u8,
    reveals_len: usize,
    out_selected: *mut u64,
    out_not_selected: *mut u64,
    out_invalid: *mut u64,
) -> RtStatus {
    guarded(|| {
        let Some(commitments) = slice_arg(commitments, commitments_len) else {
            return fail(RtStatus::NullArgument, "commitments pointer is null");
        };
        let Some(reveals) = slice_arg(reveals, reveals_len) else {
            return fail(RtStatus::NullArgument, "reveals pointer is null");
        };
        let commitments = match std::str::from_utf8(commitments) {
            Ok(text) => text,
            Err(_) => return fail(RtStatus::MalformedInput, "commitments are not UTF-8"),
        };
        let reveals = match std::str::from_utf8(reveals) {
            Ok(text) => text,
            Err(_) => return fail(RtStatus::MalformedInput, "reveals are not UTF-8"),
        };
        let (universe, commitments) = match decode_commitments(commitments) {
            Ok(parsed) => parsed,
            Err(e) => return commitment_fail(e),
        };
        let (reveal_universe, reveals) = match decode_reveals(reveals) {
            Ok(parsed) => parsed,
            Err(e) => return commitment_fail(e),
        };
        if universe != reveal_universe {
            return fail(
                RtStatus::MalformedInput,
                format!("commitments cover universe {universe}, reveals {reveal_universe}"),
            );
        }
        let summary = match verify_selection(&commitments, &reveals) {
            Ok(summary) => summary,
            Err(e) => return commitment_fail(e),
        };
        if !out_selected.is_null() {
            out_selected.write(summary.selected);
        }
        if !out_not_selected.is_null() {
            out_not_selected.write(summary.not_selected);
        }
        if !out_invalid.is_null() {
            out_invalid.write(summary.invalid);
        }
        RtStatus::Ok
    })
}

/// Generates a receipt keypair with a modulus of exactly `modulus_bits`
/// bits (512 minimum) using OS entropy, serialized as a UTF-8 document
/// containing the private exponent. Keep it secret.
///
/// # Safety
/// `out_keypair` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rt_receipt_keygen(
    modulus_bits: u32,
    out_keypair: *mut *mut RtBuffer,
) -> RtStatus {
    guarded(|| match receipt_keygen(modulus_bits, &mut OsRng) {
        Ok(keypair) => write_out(out_keypair, buffer_from(encode_keypair(&keypair).into_bytes())),
        Err(e) => commitment_fail(e),
    })
}

/// Signs a file with a keypair document from `rt_receipt_keygen` and
/// writes the receipt document.
///
/// # Safety
/// `keypair` and `file` must point to readable bytes of the given lengths;
/// `out_receipt` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rt_receipt_sign(
    keypair: *const u8,
    keypair_len: usize,
    file: *const u8,
    file_len: usize,
    out_receipt: *mut *mut RtBuffer,
) -> RtStatus {
    guarded(|| {
        let Some(keypair) = slice_arg(keypair, keypair_len) else {
            return fail(RtStatus::NullArgument, "keypair pointer is null");
        };
        let Some(file) = slice_arg(file, file_len) else {
            return fail(RtStatus::NullArgument, "file pointer is null");
        };
        let keypair = match std::str::from_utf8(keypair) {
            Ok(text) => text,
            Err(_) => return fail(RtStatus::MalformedInput, "keypair document is not UTF-8"),
        };
        let keypair = match decode_keypair(keypair) {
            Ok(parsed) => parsed,
            Err(e) => return commitment_fail(e),
        };
        let signature = receipt_sign(file, &keypair);
        write_out(
            out_receipt,
            buffer_from(encode_receipt(&keypair.n, &keypair.e, &signature).into_bytes()),
        )
    })
}

/// Checks a receipt document against a file. `out_ok` reports the verdict;
/// the status is `RT_STATUS_OK` whenever the receipt parsed, whatever the
/// verdict.
///
/// # Safety
/// `receipt` and `file` must point to readable bytes of the given lengths;
/// `out_ok` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rt_receipt_verify(
    receipt: *const u8,
    receipt_len: usize,
    file: *const u8,
    file_len: usize,
    out_ok: *mut bool,
) -> RtStatus {
    guarded(|| {
        let Some(receipt) = slice_arg(receipt, receipt_len) else {
            return fail(RtStatus::NullArgument, "receipt pointer is null");
        };
        let Some(file) = slice_arg(file, file_len) else {
            return fail(RtStatus::NullArgument, "file pointer is null");
        };
        let receipt = match std::str::from_utf8(receipt) {
            Ok(text) => text,
            Err(_) => return fail(RtStatus::MalformedInput, "receipt document is not UTF-8"),
        };
        let (n, e, signature) = match decode_receipt(receipt) {
            Ok(parsed) => parsed,
            Err(err) => return commitment_fail(err),
        };
        write_out(out_ok, receipt_verify(file, &signature, &n, &e))
    })
}
