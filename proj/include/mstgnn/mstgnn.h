/* C interface to the multiscale spatio-temporal graph motion predictor. */
#ifndef MSTGNN_MSTGNN_H
#define MSTGNN_MSTGNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(MSTG_BUILDING)
#define MSTG_API __attribute__((visibility("default")))
#else
#define MSTG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mstg_status {
  MSTG_OK = 0,
  MSTG_ERR_ARGUMENT = 1,
  MSTG_ERR_IO = 2,
  MSTG_ERR_PARSE = 3,
  MSTG_ERR_DIMENSION = 4,
  MSTG_ERR_NUMERIC = 5,
  MSTG_ERR_CHECK_FAILED = 6,
  MSTG_ERR_INTERNAL = 7
} mstg_status;

typedef struct mstg_model mstg_model;
typedef struct mstg_sequence mstg_sequence;

/* Message of the last failing call on this thread ("" if none). */
MSTG_API const char* mstg_last_error(void);
MSTG_API const char* mstg_status_name(mstg_status status);

/* Motion sequences: [frames x joints x channels], joint-major CSV on disk. */
MSTG_API mstg_status mstg_sequence_load(const char* path, mstg_sequence** out);
MSTG_API mstg_status mstg_sequence_save(const mstg_sequence* seq, const char* path);
MSTG_API mstg_status mstg_sequence_synth(size_t joints, size_t channels, size_t frames, uint64_t seed,
                                         double amplitude, mstg_sequence** out);
MSTG_API mstg_status mstg_sequence_shape(const mstg_sequence* seq, size_t* frames, size_t* joints,
                                         size_t* channels);
/* Frames [start, start + count) as a new sequence. */
MSTG_API mstg_status mstg_sequence_slice(const mstg_sequence* seq, size_t start, size_t count,
                                         mstg_sequence** out);
MSTG_API const double* mstg_sequence_data(const mstg_sequence* seq);
MSTG_API void mstg_sequence_free(mstg_sequence* seq);

typedef struct mstg_epoch_metrics {
  size_t epoch;
  size_t step;
  double l_pred;
  double l_gram;
  double l_ent;
  double total;
  double mae;
} mstg_epoch_metrics;

typedef void (*mstg_epoch_callback)(const mstg_epoch_metrics* metrics, void* user);

/* Trains on every *.csv in data_dir (sorted by name), writing a checkpoint
 * and a metrics CSV. log_path and callback may be NULL. */
MSTG_API mstg_status mstg_train(const char* config_path, const char* data_dir, const char* checkpoint_path,
                                const char* log_path, mstg_epoch_callback callback, void* user);

MSTG_API mstg_status mstg_model_load(const char* checkpoint_path, mstg_model** out);
MSTG_API void mstg_model_free(mstg_model* model);
MSTG_API mstg_status mstg_model_shape(const mstg_model* model, size_t* observed_frames, size_t* horizon,
                                      size_t* joints, size_t* channels);
/* Predicts the frames following the last observed_frames frames of seq. */
MSTG_API mstg_status mstg_model_predict(mstg_model* model, const mstg_sequence* seq, mstg_sequence** out);
/* Mean per-horizon MAE over all windows of seq with the given stride.
 * per_horizon must hold `horizon` values; windows may be NULL. */
MSTG_API mstg_status mstg_model_evaluate(mstg_model* model, const mstg_sequence* seq, size_t stride,
                                         double* per_horizon, double* mean, size_t* windows);
/* Writes learned graphs and the pooling/unpooling operators produced by the
 * last observed_frames frames of seq as CSV matrices under out_dir. */
MSTG_API mstg_status mstg_model_export_graphs(mstg_model* model, const mstg_sequence* seq, const char* out_dir);

/* Per-horizon MAE between two sequences of equal shape. */
MSTG_API mstg_status mstg_mae(const mstg_sequence* prediction, const mstg_sequence* truth, double* per_horizon,
                              double* mean);

typedef void (*mstg_gradcheck_callback)(const char* label, size_t checked, double max_error, int passed,
                                        void* user);

/* Runs the finite-difference suite. Returns MSTG_ERR_CHECK_FAILED if any
 * check exceeds the tolerance. */
MSTG_API mstg_status mstg_gradcheck(double step, double tolerance, uint64_t seed, mstg_gradcheck_callback callback,
                                    void* user);

#ifdef __cplusplus
}
#endif

#endif
