#![allow(dead_code)]

pub mod descriptors;
pub mod metrics;
pub mod scene;
pub mod svm;
