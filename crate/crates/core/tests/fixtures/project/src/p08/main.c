#include <stdio.h>
#include <string.h>

static void printLine(const char *line) {
    printf("%s\n", line);
}

int main(void) {
    int i;
    char *data;
    char dataBuffer[64];
    char source[64];
    memset(dataBuffer, 'A', 64-1);
    dataBuffer[64-1] = '\0';
    data = dataBuffer;
    memset(source, 'C', 64-1);
    source[64-1] = '\0';
    strcpy(data, source);
    data[64-1] = '\0';
    printLine(data);
    return 0;
}
