/* C interface for the tikern kernel-SVM library.
 *
 * All objects are opaque handles. Every fallible function returns a
 * status code; on failure, tk_last_error_message() returns a
 * thread-local, NUL-terminated description valid until the next failing
 * call on the same thread.
 */

#ifndef TIKERN_H
#define TIKERN_H

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. */
#define TK_OK 0
#define TK_NULL_ARGUMENT 1
#define TK_INVALID_UTF8 2
#define TK_ERROR 3

typedef struct TkDataset TkDataset;
typedef struct TkSpec TkSpec;
typedef struct TkModel TkModel;

/* Never returns NULL. */
const char *tk_last_error_message(void);

/* Loads a big-endian IDX image/label file pair (magics 0x803 / 0x801). */
int tk_dataset_load_idx(const char *images_path, const char *labels_path,
                        TkDataset **out);
/* Sample count, or -1 if dataset is NULL. */
int tk_dataset_len(const TkDataset *dataset);
/* Image dimensions; rows/cols may be NULL. */
int tk_dataset_dims(const TkDataset *dataset, int *rows, int *cols);
void tk_dataset_free(TkDataset *dataset);

/* Kernel spec from a method name with default hyper-parameters at the
 * given image dimensions. Names: "SVM", "L", "TI", "RI", "L-TI", "L-RI",
 * "TI-RI", "L-TI-RI", "RI-avg" (case-insensitive). */
int tk_spec_from_method(const char *name, int rows, int cols, TkSpec **out);
/* Kernel spec from its JSON serialization. */
int tk_spec_from_json(const char *json, TkSpec **out);
void tk_spec_free(TkSpec *spec);

/* Trains a one-vs-one multiclass SVM. c is the box constraint, tol the
 * SMO stopping tolerance, workers the thread count (min 1). */
int tk_train(const TkDataset *dataset, const TkSpec *spec, double c,
             double tol, int workers, TkModel **out);
/* Predicts the class of one row-major image of rows*cols doubles. */
int tk_model_predict(const TkModel *model, const double *pixels, int rows,
                     int cols, int *out_label);
int tk_model_save(const TkModel *model, const char *path);
int tk_model_load(const char *path, TkModel **out);
void tk_model_free(TkModel *model);

#ifdef __cplusplus
}
#endif

#endif /* TIKERN_H */
