#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "supertask/engine.hpp"

namespace supertask {

using Json = nlohmann::ordered_json;

/// Malformed or out-of-schema JSON input.
class CodecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Session configuration (seed excluded; it travels separately).
Json to_json(const SessionConfig& config);
SessionConfig config_from_json(const Json& j, std::uint64_t seed);

// Full, server-side views used in the event log.
Json to_json(const TrialSpec& trial);
Json to_json(const Prompt& prompt);
Json to_json(const Feedback& feedback);

Json to_json(const PlayerAction& action);
PlayerAction action_from_json(const Json& j);

// Player-visible views used on the wire.
Json to_json(const Observation& obs);
Observation observation_from_json(const Json& j);
Json to_json(const FeedbackView& feedback);
FeedbackView feedback_from_json(const Json& j);

/// Typed field access; throws CodecError naming the field.
template <class T>
T get_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw CodecError(std::string("missing field '") + key + "'");
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!j.at(key).is_number_integer()) throw CodecError(std::string("field '") + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (!j.at(key).is_number_unsigned() && j.at(key).template get<std::int64_t>() < 0)
        throw CodecError(std::string("field '") + key + "' must be non-negative");
    }
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CodecError(std::string("field '") + key + "' has the wrong type");
  }
}

template <class E>
E get_enum(const Json& j, const char* key) {
  const auto text = get_field<std::string>(j, key);
  const auto value = parse_enum<E>(text);
  if (!value) throw CodecError(std::string("field '") + key + "' has unknown value '" + text + "'");
  return *value;
}

}  // namespace supertask
