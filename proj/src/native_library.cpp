#include <dlfcn.h>

#include <cstdlib>

#include "kernelprof/boundary.hpp"
#include "kernelprof/error.hpp"

namespace kprof {

namespace {

std::size_t symbol_index(KernelId kernel, VariantId variant) {
  return static_cast<std::size_t>(kernel) * kAllVariants.size() + static_cast<std::size_t>(variant);
}

}  // namespace

std::string native_symbol_name(KernelId kernel, VariantId variant) {
  return "kp_" + std::string(to_string(kernel)) + "_" + std::string(to_string(variant));
}

void* NativeLibrary::symbol(KernelId kernel, VariantId variant) const noexcept {
  return symbols_[symbol_index(kernel, variant)];
}

std::size_t NativeLibrary::resolved_count() const noexcept {
  std::size_t count = 0;
  for (void* s : symbols_) count += s != nullptr;
  return count;
}

NativeLibrary load_native_library(const std::filesystem::path& path) {
  dlerror();
  void* raw = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (raw == nullptr) {
    const char* why = dlerror();
    throw Error(ErrorCode::LibraryLoad,
                "cannot load native library '" + path.string() + "': " + (why ? why : "unknown error"));
  }

  NativeLibrary library;
  library.handle_ = std::shared_ptr<void>(raw, [](void* h) { dlclose(h); });
  library.path_ = path;

  std::vector<std::string> missing;
  for (KernelId kernel : kAllKernels) {
    for (VariantId variant : kAllVariants) {
      const std::string name = native_symbol_name(kernel, variant);
      void* sym = dlsym(raw, name.c_str());
      if (sym == nullptr) missing.push_back(name);
      library.symbols_[symbol_index(kernel, variant)] = sym;
    }
  }
  if (!missing.empty()) {
    std::string message = "native library '" + path.string() + "' is missing";
    for (const auto& name : missing) message += " " + name;
    throw MissingSymbolError(message, std::move(missing));
  }

  using HasVect = int (*)();
  if (auto* query = reinterpret_cast<HasVect>(dlsym(raw, "kp_has_vect"))) {
    library.has_vect_ = query() != 0;
  }
  return library;
}

std::filesystem::path default_native_library_path() {
  if (const char* env = std::getenv("KERNELPROF_NATIVE_LIB"); env != nullptr && *env != '\0') return env;
  return "libkp_native.so";
}

NativeLibraryProbe try_load_native_library(const std::filesystem::path& path) {
  NativeLibraryProbe probe;
  try {
    probe.library = load_native_library(path);
  } catch (const Error& e) {
    probe.reason = e.what();
  }
  return probe;
}

}  // namespace kprof
