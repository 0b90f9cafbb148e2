// SPDX-License-Identifier: Apache-2.0
//! Ready-made programs.

pub mod query_loop;
pub mod wolf_sheep;
