#include <stdio.h>
#include <stdlib.h>
#include "relosc.h"

int main(void) {
    ReloscPlant *plant = NULL;
    if (relosc_plant_geometric(0.1, 1.0, 3, 0.8, &plant) != RELOSC_STATUS_OK) {
        fprintf(stderr, "%s\n", relosc_last_error());
        return 1;
    }
    double threshold = 0.0;
    bool exists = false;
    relosc_chi0_threshold(plant, &threshold);
    relosc_exists_2pd(plant, &exists);

    int8_t pattern[6] = {1, 1, 1, -1, -1, -1};
    double wave[6];
    bool fixed = false;
    relosc_verify_fixed_point(plant, pattern, 6, wave, &fixed);

    ReloscPeriodBounds b;
    relosc_period_bounds(plant, &b);
    printf("%.12g %d %d %zu %zu\n", threshold, exists, fixed, b.lower, b.upper_general);

    ReloscStatus bad = relosc_plant_from_json("{\"version\": 7}", NULL);
    printf("%d %s\n", bad, relosc_last_error() ? "error-set" : "no-error");
    relosc_plant_free(plant);
    return 0;
}
