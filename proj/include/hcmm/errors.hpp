#pragma once

#include <stdexcept>
#include <string>

namespace hcmm
{
  /// Base class for every error raised by the library.
  class Error : public std::runtime_error
  {
   public:
    using std::runtime_error::runtime_error;
  };

  /// det(F) <= 0 at a material point or quadrature point.
  class InvertedConfiguration : public Error
  {
   public:
    explicit InvertedConfiguration(const std::string& what, int element = -1)
        : Error(what), element_(element)
    {
    }
    int element() const { return element_; }

   private:
    int element_;
  };

  class InvalidParameter : public Error
  {
   public:
    using Error::Error;
  };

  /// Homeostatic stress not initialized (sigma_h <= 0).
  class UninitializedHomeostasis : public Error
  {
   public:
    using Error::Error;
  };

  /// A reference density or remodeling stretch left the admissible range.
  class StateCollapse : public Error
  {
   public:
    using Error::Error;
  };

  class ConfigError : public Error
  {
   public:
    ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
    int line() const { return line_; }

   private:
    int line_;
  };

  class SingularMatrix : public Error
  {
   public:
    using Error::Error;
  };

  class MeshError : public Error
  {
   public:
    using Error::Error;
  };
}  // namespace hcmm
