#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace villain {

// Philox4x32-10 counter-based generator (Salmon et al. 2011).
// Key = 64-bit seed. Counter words 2 and 3 hold the step and chain indices of
// the stream, words 0 and 1 count blocks within the stream, so every
// (seed, chain, step) triple owns an independent sequence of 2^64 blocks.
class Philox
{
public:
	using result_type = std::uint64_t;
	using block = std::array<std::uint32_t, 4>;
	using key_type = std::array<std::uint32_t, 2>;

	Philox(std::uint64_t seed = 0, std::uint32_t chain = 0, std::uint32_t step = 0)
	    : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, ctr_{0, 0, step, chain}
	{}

	static constexpr result_type min() { return 0; }
	static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

	result_type operator()()
	{
		if (pos_ == 4)
		{
			out_ = bijection(ctr_, key_);
			if (++ctr_[0] == 0)
				++ctr_[1];
			pos_ = 0;
		}
		result_type lo = out_[pos_++];
		result_type hi = out_[pos_++];
		return lo | (hi << 32);
	}

	// Uniform double in [0, 1) with 53 random bits.
	double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

	static block bijection(block c, key_type k)
	{
		for (int r = 0; r < 10; ++r)
		{
			if (r)
			{
				k[0] += 0x9E3779B9u;
				k[1] += 0xBB67AE85u;
			}
			std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c[0];
			std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c[2];
			c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ k[1],
			     std::uint32_t(p0)};
		}
		return c;
	}

private:
	key_type key_;
	block ctr_;
	block out_{};
	int pos_ = 4;
};

} // namespace villain
