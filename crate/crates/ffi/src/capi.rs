//! The exported C functions.

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn gf_version() -> *const libc::c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const libc::c_char
}
