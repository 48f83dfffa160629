#pragma once

#include "fkq/spectral.hpp"

#include <string>

namespace fkq {

/// Portable binary dump of a basis, tagged with the key it was computed for.
void save_basis(const SpectralBasis& basis, const std::string& key, const std::string& path);

/// Throws ParseError if the file is unreadable, corrupt or carries a different key.
SpectralBasis load_basis(const std::string& path, const std::string& key);

} // namespace fkq
