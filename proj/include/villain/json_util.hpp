#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <json.hpp>

#include "villain/errors.hpp"

namespace villain {

// Rejects keys outside `allowed` and non-object input.
inline void require_keys(const nlohmann::json &j, std::initializer_list<std::string_view> allowed, std::string_view what)
{
	if (!j.is_object())
		throw ConfigError(fmt::format("{} must be a JSON object", what));
	for (const auto &item : j.items())
	{
		bool known = false;
		for (auto a : allowed)
			known = known || item.key() == a;
		if (!known)
			throw ConfigError(fmt::format("unknown key '{}' in {}", item.key(), what));
	}
}

// Overwrites `out` when `key` is present; type mismatches are ConfigErrors.
template <class T> void read_key(const nlohmann::json &j, const char *key, T &out)
{
	if (!j.contains(key))
		return;
	try
	{
		out = j.at(key).get<T>();
	}
	catch (const nlohmann::json::exception &e)
	{
		throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
	}
}

} // namespace villain
