#pragma once

#include "mdsclt/matrixcore.hpp"

#include <string>

namespace mdsclt {

/// Plain CSV, no header, every row the same width.
Matrix read_matrix_csv(const std::string& path);

/// Square CSV checked for symmetry (1e-9 relative) and symmetrized.
SymmetricMatrix read_symmetric_csv(const std::string& path);

/// Round-trip precision (%.17g).
std::string to_csv(const Matrix& m);

/// Writes through a temporary file in the same directory, then renames.
void write_text_atomic(const std::string& path, const std::string& text);
void write_matrix_csv(const std::string& path, const Matrix& m);

std::string read_text(const std::string& path);

} // namespace mdsclt
