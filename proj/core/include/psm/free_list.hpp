#pragma once

#include <cstddef>

namespace psm {

// Intrusive LIFO free list: the link pointer lives in the first word of each
// free block (min block size is 8, so it always fits).
class FreeList {
public:
    void push(void* block) {
        *static_cast<void**>(block) = head_;
        head_ = block;
        ++count_;
    }

    void* pop() {
        void* b = head_;
        head_ = *static_cast<void**>(b);
        --count_;
        return b;
    }

    bool empty() const { return head_ == nullptr; }
    std::size_t size() const { return count_; }

private:
    void* head_ = nullptr;
    std::size_t count_ = 0;
};

} // namespace psm
