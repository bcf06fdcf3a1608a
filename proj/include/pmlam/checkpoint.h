// SPDX-License-Identifier: Apache-2.0
//
// Versioned binary checkpoint ("PMLAM-CKPT v1"). The byte layout is described
// in docs/file_formats.md.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pmlam/model.h"

namespace pmlam {

struct Checkpoint {
    std::string config_text;  // to_text() of the run configuration
    std::uint64_t fold = 0;
    std::uint64_t dataset_hash = 0;
    ModelState state;
};

/// Atomic: written to a temporary file, then renamed over `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws InputError for a missing, truncated or foreign file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pmlam
