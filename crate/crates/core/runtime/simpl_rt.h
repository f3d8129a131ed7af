/* Runtime support for emitted samplers. Header-only, C99. */
#ifndef SIMPL_RT_H
#define SIMPL_RT_H

#define SIMPL_RT_VERSION 1

#include <inttypes.h>
#include <math.h>
#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#define SIMPL_EXIT_RUNTIME 4
#define SIMPL_EXIT_CACHE_MISMATCH 13

static inline void simpl_fail(int code, const char *fmt, ...)
{
    va_list ap;
    fputs("error: ", stderr);
    va_start(ap, fmt);
    vfprintf(stderr, fmt, ap);
    va_end(ap);
    fputc('\n', stderr);
    exit(code);
}

/* splitmix64 */
typedef struct {
    uint64_t state;
    uint64_t draws;
} simpl_rng;

static inline uint64_t simpl_next(simpl_rng *r)
{
    uint64_t z;
    r->state += UINT64_C(0x9E3779B97F4A7C15);
    r->draws++;
    z = r->state;
    z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
    return z ^ (z >> 31);
}

static inline double simpl_uniform(simpl_rng *r)
{
    return (double)(simpl_next(r) >> 11) * (1.0 / 9007199254740992.0);
}

static inline bool simpl_flip(simpl_rng *r, double p)
{
    if (!(p >= 0.0 && p <= 1.0))
        simpl_fail(SIMPL_EXIT_RUNTIME, "flip: probability %.17g is outside [0, 1]", p);
    return simpl_uniform(r) < p;
}

static inline int64_t simpl_below(simpl_rng *r, int64_t k)
{
    if (k < 1)
        simpl_fail(SIMPL_EXIT_RUNTIME, "random-integer: bound %" PRId64 " must be positive", k);
    return (int64_t)(simpl_uniform(r) * (double)k);
}

static inline int64_t simpl_index(int64_t i, int64_t len, const char *what)
{
    if (i < 0 || i >= len)
        simpl_fail(SIMPL_EXIT_RUNTIME, "index %" PRId64 " out of range for %s of length %" PRId64, i, what, len);
    return i;
}

static inline int64_t simpl_add_i(int64_t a, int64_t b) { return (int64_t)((uint64_t)a + (uint64_t)b); }
static inline int64_t simpl_sub_i(int64_t a, int64_t b) { return (int64_t)((uint64_t)a - (uint64_t)b); }
static inline int64_t simpl_mul_i(int64_t a, int64_t b) { return (int64_t)((uint64_t)a * (uint64_t)b); }
static inline int64_t simpl_neg_i(int64_t a) { return (int64_t)(UINT64_C(0) - (uint64_t)a); }
static inline int64_t simpl_min_i(int64_t a, int64_t b) { return b < a ? b : a; }
static inline int64_t simpl_max_i(int64_t a, int64_t b) { return b > a ? b : a; }
static inline double simpl_min_d(double a, double b) { return b < a ? b : a; }
static inline double simpl_max_d(double a, double b) { return b > a ? b : a; }

static inline bool simpl_same_d(double a, double b)
{
    return memcmp(&a, &b, sizeof a) == 0;
}

/* Run-time vectors hold doubles; integer and boolean elements are exact. */
typedef struct {
    int64_t len;
    double *v;
} simpl_vec;

static inline simpl_vec *simpl_vec_new(int64_t len)
{
    simpl_vec *x;
    if (len < 0)
        simpl_fail(SIMPL_EXIT_RUNTIME, "make-vector: negative length %" PRId64, len);
    x = malloc(sizeof *x);
    if (!x)
        simpl_fail(SIMPL_EXIT_RUNTIME, "out of memory");
    x->len = len;
    x->v = calloc(len > 0 ? (size_t)len : 1, sizeof(double));
    if (!x->v)
        simpl_fail(SIMPL_EXIT_RUNTIME, "out of memory");
    return x;
}

static inline simpl_vec *simpl_vec_fill(int64_t len, double fill)
{
    simpl_vec *x = simpl_vec_new(len);
    int64_t i;
    for (i = 0; i < len; i++)
        x->v[i] = fill;
    return x;
}

static inline double simpl_vec_ref(const simpl_vec *x, int64_t i)
{
    return x->v[simpl_index(i, x->len, "vector")];
}

static inline void simpl_vec_set(simpl_vec *x, int64_t i, double value)
{
    x->v[simpl_index(i, x->len, "vector")] = value;
}

static inline simpl_vec *simpl_normalize(const simpl_vec *x)
{
    simpl_vec *out = simpl_vec_new(x->len);
    double sum = 0.0;
    int64_t i;
    for (i = 0; i < x->len; i++)
        sum += x->v[i];
    if (sum == 0.0)
        simpl_fail(SIMPL_EXIT_RUNTIME, "normalize: weights sum to zero (no accepted mass)");
    for (i = 0; i < x->len; i++)
        out->v[i] = x->v[i] / sum;
    return out;
}

/* Open-addressing table for cache keys too wide to index directly. */
typedef struct {
    size_t width;
    size_t cap;
    size_t len;
    uint64_t *keys;
    double *vals;
    unsigned char *occ;
} simpl_htab;

static inline uint64_t simpl_hash(const uint64_t *key, size_t width)
{
    uint64_t h = UINT64_C(0x9E3779B97F4A7C15);
    size_t i;
    for (i = 0; i < width; i++) {
        h ^= key[i] + UINT64_C(0x9E3779B97F4A7C15) + (h << 6) + (h >> 2);
        h = (h ^ (h >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
    }
    return h ^ (h >> 31);
}

static inline void simpl_htab_alloc(simpl_htab *t, size_t cap)
{
    t->cap = cap;
    t->len = 0;
    t->keys = calloc(cap * (t->width ? t->width : 1), sizeof(uint64_t));
    t->vals = calloc(cap, sizeof(double));
    t->occ = calloc(cap, 1);
    if (!t->keys || !t->vals || !t->occ)
        simpl_fail(SIMPL_EXIT_RUNTIME, "out of memory");
}

static inline size_t simpl_htab_slot(const simpl_htab *t, const uint64_t *key)
{
    size_t i = (size_t)simpl_hash(key, t->width) & (t->cap - 1);
    while (t->occ[i] && memcmp(t->keys + i * t->width, key, t->width * sizeof(uint64_t)) != 0)
        i = (i + 1) & (t->cap - 1);
    return i;
}

static inline void simpl_htab_grow(simpl_htab *t)
{
    simpl_htab old = *t;
    size_t i;
    simpl_htab_alloc(t, old.cap * 2);
    for (i = 0; i < old.cap; i++) {
        if (old.occ[i]) {
            size_t j = simpl_htab_slot(t, old.keys + i * old.width);
            memcpy(t->keys + j * t->width, old.keys + i * old.width, t->width * sizeof(uint64_t));
            t->vals[j] = old.vals[i];
            t->occ[j] = 1;
            t->len++;
        }
    }
    free(old.keys);
    free(old.vals);
    free(old.occ);
}

/* Returns the value slot for key; *found tells whether it was present.
   A new slot is claimed when absent. */
static inline double *simpl_htab_lookup(simpl_htab *t, const uint64_t *key, bool *found)
{
    size_t i;
    if (t->cap == 0)
        simpl_htab_alloc(t, 64);
    if (2 * (t->len + 1) > t->cap)
        simpl_htab_grow(t);
    i = simpl_htab_slot(t, key);
    *found = t->occ[i] != 0;
    if (!*found) {
        memcpy(t->keys + i * t->width, key, t->width * sizeof(uint64_t));
        t->occ[i] = 1;
        t->len++;
    }
    return &t->vals[i];
}

typedef struct {
    uint64_t hits;
    uint64_t misses;
    uint64_t entries;
    int dense;
} simpl_cache_stats;

static inline void simpl_check_cached(int cache, double stored, double recomputed)
{
    if (!simpl_same_d(stored, recomputed))
        simpl_fail(SIMPL_EXIT_CACHE_MISMATCH, "cache %d mismatch: stored %.17g, recomputed %.17g",
                   cache, stored, recomputed);
}

static inline uint64_t simpl_now_ns(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * UINT64_C(1000000000) + (uint64_t)ts.tv_nsec;
}

static inline uint64_t simpl_bits(double x)
{
    uint64_t b;
    memcpy(&b, &x, sizeof b);
    return b;
}

static inline void simpl_print_double(double x)
{
    if (isfinite(x))
        printf("%.17g", x);
    else
        printf("null");
}

#endif
