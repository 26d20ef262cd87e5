//! Problem size and the window codec.
//!
//! Symbols are `0..m`. A window `(x_i, ..., x_{i+k-1})` is packed base `m`
//! with the earliest symbol most significant, so shifting in a new symbol is
//! `(code mod m^{k-1}) * m + x`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Alphabet size `m`, arity `k` and the derived state count `M = m^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    m: u64,
    k: u32,
    states: u64,
    /// `m^{k-1}`, the modulus that drops the earliest symbol of a window.
    lead: u64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    m: u64,
    k: u32,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.m, raw.k)
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams { m: p.m, k: p.k }
    }
}

impl Params {
    pub fn new(m: u64, k: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("alphabet size m must be at least 1"));
        }
        if k == 0 {
            return Err(Error::domain("arity k must be at least 1"));
        }
        let lead = m
            .checked_pow(k - 1)
            .ok_or_else(|| Error::domain(format!("m^k overflows 64 bits for m = {m}, k = {k}")))?;
        let states = lead
            .checked_mul(m)
            .ok_or_else(|| Error::domain(format!("m^k overflows 64 bits for m = {m}, k = {k}")))?;
        Ok(Params { m, k, states, lead })
    }

    #[inline]
    pub fn m(&self) -> u64 {
        self.m
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    /// State count `M = m^k`.
    #[inline]
    pub fn states(&self) -> u64 {
        self.states
    }

    fn check_symbol(&self, x: u64) -> Result<()> {
        if x < self.m {
            Ok(())
        } else {
            Err(Error::domain(format!("symbol {x} outside [0, {})", self.m)))
        }
    }

    /// Packs a `k`-tuple of symbols into its window code.
    pub fn encode(&self, symbols: &[u64]) -> Result<WindowCode> {
        if symbols.len() != self.k as usize {
            return Err(Error::domain(format!(
                "window has {} symbols, expected k = {}",
                symbols.len(),
                self.k
            )));
        }
        let mut code = 0u64;
        for &x in symbols {
            self.check_symbol(x)?;
            code = code * self.m + x;
        }
        Ok(WindowCode(code))
    }

    pub fn decode(&self, code: WindowCode) -> Result<Vec<u64>> {
        self.check_code(code)?;
        let mut out = vec![0u64; self.k as usize];
        let mut c = code.0;
        for slot in out.iter_mut().rev() {
            *slot = c % self.m;
            c /= self.m;
        }
        Ok(out)
    }

    pub fn check_code(&self, code: WindowCode) -> Result<()> {
        if code.0 < self.states {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "window code {} outside [0, {})",
                code.0, self.states
            )))
        }
    }

    /// Drops the earliest symbol of `code` and appends `x`.
    pub fn roll(&self, code: WindowCode, x: u64) -> Result<WindowCode> {
        self.check_code(code)?;
        self.check_symbol(x)?;
        Ok(self.roll_unchecked(code, x))
    }

    /// [`Params::roll`] without range checks; callers guarantee `code < M`
    /// and `x < m`.
    #[inline]
    pub fn roll_unchecked(&self, code: WindowCode, x: u64) -> WindowCode {
        WindowCode((code.0 % self.lead) * self.m + x)
    }

    /// The constant window `(j, ..., j)`.
    pub fn diagonal(&self, j: u64) -> Result<WindowCode> {
        self.check_symbol(j)?;
        // j * (m^{k-1} + ... + 1); no overflow since the result is < M.
        let mut code = 0u64;
        for _ in 0..self.k {
            code = code * self.m + j;
        }
        Ok(WindowCode(code))
    }

    /// The newest (last) symbol of a window.
    #[inline]
    pub fn last_symbol(&self, code: WindowCode) -> u64 {
        code.0 % self.m
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={}, k={} (M={})", self.m, self.k, self.states)
    }
}

/// Base-`m` positional code of a window, earliest symbol most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WindowCode(pub u64);

impl WindowCode {
    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}
