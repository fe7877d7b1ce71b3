//! Loosely typed catalog parameters with path-aware validation.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

pub type Parameters = BTreeMap<String, ParamValue>;

pub(crate) struct ParamReader<'a> {
    path: &'a str,
    params: &'a Parameters,
    used: RefCell<BTreeSet<&'a str>>,
}

impl<'a> ParamReader<'a> {
    pub fn new(path: &'a str, params: &'a Parameters) -> Self {
        Self { path, params, used: RefCell::new(BTreeSet::new()) }
    }

    fn key_path(&self, key: &str) -> String {
        format!("{}.{}", self.path, key)
    }

    fn get(&self, key: &'a str) -> Option<&'a ParamValue> {
        self.used.borrow_mut().insert(key);
        self.params.get(key)
    }

    pub fn scalar(&self, key: &'a str) -> Result<f64> {
        match self.get(key) {
            Some(ParamValue::Scalar(v)) => Ok(*v),
            Some(_) => Err(Error::config(self.key_path(key), "expected a number")),
            None => Err(Error::config(self.key_path(key), "missing required parameter")),
        }
    }

    pub fn scalar_or(&self, key: &'a str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.scalar(key),
        }
    }

    pub fn vector(&self, key: &'a str, len: usize) -> Result<Vec<f64>> {
        let v = match self.get(key) {
            Some(ParamValue::Vector(v)) => v.clone(),
            Some(ParamValue::Scalar(s)) if len == 1 => vec![*s],
            Some(_) => return Err(Error::config(self.key_path(key), "expected a list of numbers")),
            None => return Err(Error::config(self.key_path(key), "missing required parameter")),
        };
        if v.len() != len {
            return Err(Error::config(self.key_path(key), format!("expected {len} entries, got {}", v.len())));
        }
        Ok(v)
    }

    pub fn vector_or(&self, key: &'a str, len: usize, default: f64) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(vec![default; len]),
            Some(_) => self.vector(key, len),
        }
    }

    pub fn matrix(&self, key: &'a str, n: usize) -> Result<Vec<Vec<f64>>> {
        let m = match self.get(key) {
            Some(ParamValue::Matrix(m)) => m.clone(),
            Some(ParamValue::Scalar(s)) if n == 1 => vec![vec![*s]],
            Some(ParamValue::Vector(v)) if n == 1 && v.len() == 1 => vec![v.clone()],
            Some(_) => return Err(Error::config(self.key_path(key), "expected a square matrix (list of rows)")),
            None => return Err(Error::config(self.key_path(key), "missing required parameter")),
        };
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(Error::config(self.key_path(key), format!("expected a {n}x{n} matrix")));
        }
        Ok(m)
    }

    pub fn matrix_or_zero(&self, key: &'a str, n: usize) -> Result<Vec<Vec<f64>>> {
        match self.get(key) {
            None => Ok(vec![vec![0.0; n]; n]),
            Some(_) => self.matrix(key, n),
        }
    }

    /// Rejects keys that were never read.
    pub fn finish(self) -> Result<()> {
        let used = self.used.borrow();
        match self.params.keys().find(|k| !used.contains(k.as_str())) {
            Some(k) => {
                let known: Vec<&str> = used.iter().copied().collect();
                Err(Error::config(self.key_path(k), format!("unknown parameter; expected one of {known:?}")))
            }
            None => Ok(()),
        }
    }
}

pub(crate) fn scalar(v: f64) -> ParamValue {
    ParamValue::Scalar(v)
}
