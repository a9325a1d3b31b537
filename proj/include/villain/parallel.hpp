#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace villain {

// Runs f(i) for i in [0, n) on up to `threads` workers. Work items must only
// write to their own slot, so results do not depend on the thread count.
template <class F> void parallel_for(std::size_t n, int threads, F &&f)
{
	const std::size_t workers = std::min<std::size_t>(std::max(1, threads), n);
	if (workers <= 1)
	{
		for (std::size_t i = 0; i < n; ++i)
			f(i);
		return;
	}
	std::atomic<std::size_t> next{0};
	std::exception_ptr error;
	std::mutex error_mutex;
	std::vector<std::thread> pool;
	for (std::size_t w = 0; w < workers; ++w)
		pool.emplace_back([&] {
			for (std::size_t i = next++; i < n; i = next++)
			{
				try
				{
					f(i);
				}
				catch (...)
				{
					std::lock_guard lock(error_mutex);
					if (!error)
						error = std::current_exception();
				}
			}
		});
	for (auto &t : pool)
		t.join();
	if (error)
		std::rethrow_exception(error);
}

} // namespace villain
