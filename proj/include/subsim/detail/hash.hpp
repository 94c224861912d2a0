#ifndef SUBSIM_DETAIL_HASH_HPP
#define SUBSIM_DETAIL_HASH_HPP

#include <cstdint>
#include <cstring>
#include <string_view>

namespace subsim::detail {

/// Incremental FNV-1a (64-bit). Used for dataset digests and container checksums.
class Fnv1a {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }

    template <class T>
    void update_pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        update(&v, sizeof(T));
    }

    void update_doubles(const double* v, std::size_t n) { update(v, n * sizeof(double)); }

    void update_string(std::string_view s) {
        const std::uint64_t n = s.size();
        update_pod(n);
        update(s.data(), s.size());
    }

    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace subsim::detail

#endif
