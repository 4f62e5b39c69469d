// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdpano/config_io.hpp"
#include "mdpano/error.hpp"

#include <json.hpp>

#include <set>
#include <string>

namespace mdpano::detail {

using Json = nlohmann::json;

Json parseJson(const std::string &text, const std::string &what);

/// Object accessor that remembers which keys were read and rejects the rest.
class ObjectReader {
public:
    ObjectReader(const Json &object, std::string where);

    bool has(const std::string &key) const;
    const Json &get(const std::string &key);
    double number(const std::string &key);
    double number(const std::string &key, double fallback);
    int integer(const std::string &key);
    int integer(const std::string &key, int fallback);
    std::string string(const std::string &key, const std::string &fallback);
    /// Marks an optional key as known without reading it.
    void allow(const std::string &key) { used_.insert(key); }
    void finish() const;
    const std::string &where() const { return where_; }

private:
    const Json &object_;
    std::string where_;
    std::set<std::string> used_;
};

std::vector<double> numbers(const Json &value, std::size_t count, const std::string &where);

/// Checks the "version" key of a top-level document.
void requireVersion(ObjectReader &reader);

PoseSpec poseFromJson(const Json &value, const std::string &where);
Json poseToJson(const PoseSpec &pose);

} // namespace mdpano::detail
