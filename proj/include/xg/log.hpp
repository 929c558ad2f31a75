#pragma once

#include <cstdio>
#include <string>

namespace xg::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, ErrorLevel = 3 };

Level threshold();
void set_threshold(Level lv);
void emit(Level lv, const std::string& msg);

inline void debug(const std::string& msg) { emit(Level::Debug, msg); }
inline void info(const std::string& msg) { emit(Level::Info, msg); }
inline void warn(const std::string& msg) { emit(Level::Warn, msg); }
inline void error(const std::string& msg) { emit(Level::ErrorLevel, msg); }

}  // namespace xg::log
