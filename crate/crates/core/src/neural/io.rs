/*
  Copyright 2026 The conplan Authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

//! Versioned JSON persistence of network weights.

use super::{Dense, NetworkShape, PlanningNetwork};
use crate::error::{check_version, from_json_str, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct WeightsFile<T> {
    version: u32,
    shape: NetworkShape,
    obs: Vec<Dense<T>>,
    task: Vec<Dense<T>>,
    pnet: Vec<Dense<T>>,
}

pub fn weights_to_string<T: Real>(net: &PlanningNetwork<T>) -> Result<String> {
    let file = WeightsFile {
        version: WEIGHTS_VERSION,
        shape: net.shape.clone(),
        obs: net.obs.clone(),
        task: net.task.clone(),
        pnet: net.pnet.clone(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn weights_from_str<T: Real>(text: &str) -> Result<PlanningNetwork<T>> {
    check_version("weights", text, WEIGHTS_VERSION)?;
    let file: WeightsFile<T> = from_json_str("weights", text)?;
    PlanningNetwork::from_parts(file.shape, file.obs, file.task, file.pnet)
}

pub fn save_weights<T: Real>(net: &PlanningNetwork<T>, path: &Path) -> Result<()> {
    std::fs::write(path, weights_to_string(net)?)?;
    Ok(())
}

pub fn load_weights<T: Real>(path: &Path) -> Result<PlanningNetwork<T>> {
    weights_from_str(&std::fs::read_to_string(path)?)
}
