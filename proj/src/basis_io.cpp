#include "fkq/basis_io.hpp"

#include "fkq/errors.hpp"

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include <cstdint>
#include <fstream>

namespace fkq {

namespace {

constexpr std::uint32_t kMagic = 0x666b7142; // "fkqB"
constexpr std::uint32_t kVersion = 1;

template <class Archive>
void fields(Archive& ar, SpectralBasis& b)
{
    ar(b.lambdas, b.psis, b.dpsis, b.thetas, b.ell, b.tildeV, b.a, b.a_prime, b.V);
    ar(b.tildeA, b.tildeE, b.tilde_x0, b.beta, b.gamma, b.richardson);
}

} // namespace

void save_basis(const SpectralBasis& basis, const std::string& key, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ParseError("cannot write basis file " + path);
    cereal::PortableBinaryOutputArchive ar(os);
    std::uint64_t n = basis.grid.n();
    ar(kMagic, kVersion, key, basis.grid.lo(), basis.grid.hi(), n);
    fields(ar, const_cast<SpectralBasis&>(basis));
}

SpectralBasis load_basis(const std::string& path, const std::string& key)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ParseError("cannot read basis file " + path);
    try {
        cereal::PortableBinaryInputArchive ar(is);
        std::uint32_t magic = 0, version = 0;
        std::string stored;
        double lo = 0, hi = 0;
        std::uint64_t n = 0;
        ar(magic, version, stored, lo, hi, n);
        if (magic != kMagic || version != kVersion)
            throw ParseError("not a basis file: " + path);
        if (stored != key)
            throw ParseError("basis file " + path + " was computed for a different model");
        SpectralBasis b{Grid::interval(lo, hi, static_cast<std::size_t>(n)), {}, {}, {}, {}, {}, {}, {}, {}, {}};
        fields(ar, b);
        if (b.psis.size() != b.lambdas.size() || (!b.psis.empty() && b.psis[0].size() != n))
            throw ParseError("inconsistent basis file " + path);
        return b;
    } catch (const cereal::Exception& e) {
        throw ParseError("corrupt basis file " + path + ": " + e.what());
    }
}

} // namespace fkq
