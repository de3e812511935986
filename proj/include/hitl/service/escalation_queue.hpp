#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace hitl::service {

struct QueueEntry {
  std::string session_id;
  std::string ticket_id;
  std::int64_t deadline_ms = 0;
};

// Pending tickets across all sessions, oldest first. Every operation takes
// the lock, so concurrent sessions and supervisors see a single order.
class EscalationQueue {
 public:
  void push(QueueEntry e) {
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(e));
  }

  // Removes the ticket; only the first caller gets it.
  std::optional<QueueEntry> take(const std::string& ticket_id) {
    std::lock_guard lock(mu_);
    for (auto it = entries_.begin(); it != entries_.end(); ++it)
      if (it->ticket_id == ticket_id) {
        auto e = std::move(*it);
        entries_.erase(it);
        return e;
      }
    return std::nullopt;
  }

  // Removes and returns every entry whose deadline has passed.
  std::vector<QueueEntry> take_expired(std::int64_t now_ms) {
    std::lock_guard lock(mu_);
    std::vector<QueueEntry> out;
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->deadline_ms <= now_ms) {
        out.push_back(std::move(*it));
        it = entries_.erase(it);
      } else {
        ++it;
      }
    }
    return out;
  }

  std::vector<QueueEntry> snapshot() const {
    std::lock_guard lock(mu_);
    return {entries_.begin(), entries_.end()};
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  mutable std::mutex mu_;
  std::deque<QueueEntry> entries_;
};

}  // namespace hitl::service
