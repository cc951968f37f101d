#include <stdio.h>
#include <string.h>

static void printLine(const char *line) {
    printf("%s\n", line);
}

int main(void) {
    int i;
    char *data;
    char dataBuffer[50];
    char source[50];
    memset(dataBuffer, 'A', 50-1);
    dataBuffer[50-1] = '\0';
    data = dataBuffer;
    memset(source, 'C', 50-1);
    source[50-1] = '\0';
    for (i = 0; i < 50; i++) {
        data[i] = source[i];
    }
    data[50-1] = '\0';
    printLine(data);
    return 0;
}
