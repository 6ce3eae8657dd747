#include "kbkz/errors.hpp"

#include <sstream>

namespace kbkz {

namespace {
std::string breach_message(double x, double t, double value, double theta) {
  std::ostringstream os;
  os.precision(17);
  os << "hyperbolicity window breached at x=" << x << ", t=" << t
     << ": |strain increment|=" << value << " > theta=" << theta;
  return os.str();
}

std::string config_message(const std::string& field, int line, const std::string& what) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  if (!field.empty()) os << "[" << field << "] ";
  os << what;
  return os.str();
}
}  // namespace

HyperbolicityBreach::HyperbolicityBreach(double x, double t, double value, double theta)
    : Error(breach_message(x, t, value, theta)), x_(x), t_(t), value_(value), theta_(theta) {}

ConfigError::ConfigError(const std::string& field, int line, const std::string& what)
    : Error(config_message(field, line, what)), field_(field), line_(line) {}

}  // namespace kbkz
